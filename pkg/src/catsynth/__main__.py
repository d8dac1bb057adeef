from catsynth.cli import main

raise SystemExit(main())
