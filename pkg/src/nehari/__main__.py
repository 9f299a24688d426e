from nehari.cli import main

raise SystemExit(main())
