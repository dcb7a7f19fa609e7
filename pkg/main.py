import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from main_app import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
