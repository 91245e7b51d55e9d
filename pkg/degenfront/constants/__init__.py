from .defaults import CheckStatus, ExitCode, Orientation, SpeedSign, Subcommand

__all__ = ["CheckStatus", "ExitCode", "Orientation", "SpeedSign", "Subcommand"]
