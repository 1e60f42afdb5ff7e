"""The bundled 128x128 grayscale test suite."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

SUITE_IDS = (
    "s0_shapes", "s1_shapes", "s2_smooth", "s3_stripes", "s4_shapes",
    "n0_camera", "n1_coins", "n2_moon", "n3_astronaut", "n4_coffee",
)


def suite_dir() -> Path:
    return Path(str(resources.files("poisdeconv") / "data" / "suite"))


def suite_paths(ids=SUITE_IDS) -> list[Path]:
    """Paths of the bundled images, in suite order."""
    root = suite_dir()
    return [root / f"{i}.pgm" for i in ids]


def resolve_images(spec: str, base: Path | None = None) -> list[Path]:
    """Expand an image list from a plan file.

    ``suite`` means the bundled images; a bare suite id picks one of them; a
    directory contributes its ``.pgm``/``.pfm`` files in sorted order; anything
    else is taken as a file path, relative to ``base`` when given.
    """
    out: list[Path] = []
    for item in (s.strip() for s in spec.split(",")):
        if not item:
            continue
        if item == "suite":
            out.extend(suite_paths())
        elif item in SUITE_IDS:
            out.extend(suite_paths((item,)))
        else:
            path = Path(item)
            if base is not None and not path.is_absolute():
                path = base / path
            if path.is_dir():
                out.extend(sorted(p for p in path.iterdir() if p.suffix.lower() in (".pgm", ".pfm")))
            else:
                out.append(path)
    return out
