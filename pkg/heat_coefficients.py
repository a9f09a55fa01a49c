"""Command-line entry point for computing heat kernel coefficient jets."""

from __future__ import annotations

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent / "src"))

from heat_kernel_jets.cli import main  # noqa: E402


if __name__ == "__main__":  # pragma: no cover - CLI entry point
    sys.exit(main())
