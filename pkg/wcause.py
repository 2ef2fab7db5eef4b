#!/usr/bin/env python3
"""
Command-line entry point for the W causal workbench.

Run from the project root, e.g.:

    python wcause.py causes corpus/suzy_first.w broken
    python wcause.py explain corpus/suzy_obs.w "obs(broken,true,3)"
"""

import sys
from pathlib import Path

# the src package lives next to this script
sys.path.insert(0, str(Path(__file__).resolve().parent))

from src.main import main

if __name__ == '__main__':
    main()
