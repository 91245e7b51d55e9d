from degenfront.main import main

raise SystemExit(main())
