import os
import sys

# The lab modules are flat top-level scripts
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
