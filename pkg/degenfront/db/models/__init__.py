from .run import RunRecord

__all__ = ['RunRecord']
