"""Full 32 x 32 design with the -21.26 dB, r = 0.055 mask on a 0.005 lattice.

This is the long job: each cone program has about 172 000 cone constraints
over 1024 weights, the steering data alone take roughly 2.8 GB, and the
whole run is expected to last many hours on a single machine.  It is never
started by the test suite.

Run:  python demos/full_scale_reproduction.py --yes [out_dir]
"""

import sys
import time
from pathlib import Path

from sparse2d import io as sio
from sparse2d.synthesis import run_synthesis, verify_solution

CONFIG = Path(__file__).resolve().parents[1] / "configs" / "full32.yaml"

if "--yes" not in sys.argv:
    print(__doc__)
    sys.exit("refusing to start without --yes")
args = [a for a in sys.argv[1:] if a != "--yes"]
out = Path(args[0] if args else "full_scale_output")

rc = sio.load_config(CONFIG)
cfg = rc.synthesis_config()
t0 = time.perf_counter()


def show(rec):
    sio.write_csv(out / "trace_partial.csv", [(rec.k, rec.count, rec.objective, rec.seconds)])
    print(f"iteration {rec.k:3d}: {rec.count:5d} active  objective {rec.objective:.6g}  "
          f"{rec.seconds / 60:.1f} min", flush=True)


res = run_synthesis(cfg, log=show)
print(f"{res.termination} after {(time.perf_counter() - t0) / 3600:.2f} h")
sio.write_csv(out / "trace.csv", res.trace.csv_rows())
if res.layout is not None:
    sio.write_layout(out / "layout.csv", res.layout)
    rep = verify_solution(res.layout, cfg.mask, cfg.du)
    print(f"{len(res.layout)} active elements, peak side lobe {rep.peak_sll_db:.2f} dB")
