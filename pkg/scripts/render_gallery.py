#!/usr/bin/env python3
"""Emit SVG phase portraits/phase lines for the whole corpus into out/.

Usage: python scripts/render_gallery.py [outdir]
"""

import sys
from pathlib import Path

from phaseport.corpus import builtin_model, builtin_names
from phaseport.phase1d import Model1D
from phaseport.svg import render_phaseline_svg, render_portrait_svg

# a representative orbit start per 2D model
STARTS = {
    "ppour": ((1.5, 1.5),),
    "lotka_volterra": ((1.0, 1.0),),
    "algae": ((2.0, 0.5),),
    "brusselator": ((1.4, 2.5),),
    "holling_tanner": ((0.4, 0.25),),
    "mrna_protein": ((1.5, 0.2),),
    "cardiac": ((0.8, 0.0),),
}


def main(argv: list[str]) -> int:
    outdir = Path(argv[0]) if argv else Path("out")
    outdir.mkdir(parents=True, exist_ok=True)
    for name in builtin_names():
        record = builtin_model(name)
        if not record.available:
            continue
        path = outdir / f"{name}.svg"
        if isinstance(record.model, Model1D):
            path.write_text(render_phaseline_svg(record.model))
        else:
            path.write_text(render_portrait_svg(
                record.model, starts=STARTS.get(name, ()), t_max=20.0))
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
