import os
import sys

# tests import modules from the repository root, like main.py does
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
