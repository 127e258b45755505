"""Re-run CLI commands from their manifests and check outputs are byte-identical.

    python scripts/replay_manifest.py runs/*.manifest.json --out-dir replay/

Exits non-zero if any output differs or an input changed since the manifest.
"""

import argparse
import sys
from pathlib import Path

from marolab.cli import replay_manifest


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("manifests", nargs="+", type=Path)
    ap.add_argument("--out-dir", type=Path, default=Path("replay"))
    args = ap.parse_args()
    ok = True
    for i, man in enumerate(args.manifests):
        target = args.out_dir / f"{i:02d}-{man.stem}"
        target.mkdir(parents=True, exist_ok=True)
        for output, same in replay_manifest(man, target).items():
            print(f"{'same' if same else 'DIFF'}  {output}")
            ok &= same
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
