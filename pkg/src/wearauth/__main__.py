from wearauth.cli import main

raise SystemExit(main())
