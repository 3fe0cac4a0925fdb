#!/usr/bin/env python3
"""Rebuild data/musk1.data and data/musk2.data in the UCI clean1/clean2 layout.

The UCI archive is not always reachable, so this pulls the `mil` wheel from
PyPI (it bundles both MUSK sets as `label,bag_id,f1..f166`) and rewrites the
rows as `molecule_name,conformation_name,f1,...,f166,class`.
"""
import io
import pathlib
import subprocess
import sys
import tempfile
import zipfile

OUT = pathlib.Path(__file__).resolve().parent.parent / "data"


def convert(raw: str) -> str:
    lines = []
    seen = {}
    for row in raw.splitlines():
        if not row.strip():
            continue
        fields = row.split(",")
        label, bag, feats = fields[0], fields[1], fields[2:]
        assert len(feats) == 166, len(feats)
        name = ("MUSK-" if label == "1" else "NON-MUSK-") + bag
        seen[bag] = seen.get(bag, 0) + 1
        conf = f"{bag}_{seen[bag]}"
        lines.append(",".join([name, conf, *feats, label]))
    return "\n".join(lines) + "\n"


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-d", tmp, "mil==1.0.5"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("mil-*.whl"))
        with zipfile.ZipFile(wheel) as z:
            for name in ("musk1", "musk2"):
                raw = z.read(f"mil/data/datasets/csv/{name}.csv").decode()
                OUT.mkdir(exist_ok=True)
                (OUT / f"{name}.data").write_text(convert(raw))
                print(f"wrote {OUT / (name + '.data')}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
