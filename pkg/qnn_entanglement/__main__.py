import sys

from qnn_entanglement.main import main

sys.exit(main())
