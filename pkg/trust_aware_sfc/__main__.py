from trust_aware_sfc.presentation.cli import main

raise SystemExit(main())
