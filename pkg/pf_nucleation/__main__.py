import sys

from pf_nucleation.app.management import main

sys.exit(main())
