# run the test suite from the repository root with `python3 tests`
import atexit
import os
import sys

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import unittest
import VSFLOW.common

# warnings registered by the tests are checked (or discarded) by the tests
# themselves and must not be printed when the interpreter exits
atexit.unregister(VSFLOW.common.flush_warnings)
VSFLOW.common.setup_i18n()

sys.argv.append("discover")
sys.argv.append("tests")
unittest.TestProgram(module=None)
