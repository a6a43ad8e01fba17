import sys
from pathlib import Path

# Oracle generators and recount scripts live beside the tests but outside
# the package, so they can never import the code under test by accident.
sys.path.insert(0, str(Path(__file__).resolve().parent / "oracles"))
