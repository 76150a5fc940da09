import sys

from lica.app.cli import main

sys.exit(main())
