"""What a microwave on rS <-> rP does to STIRAP.

Once the microwave couples |rS> to |rP>, the dark state of the ladder is no
longer an eigenstate and population leaks into the short-lived |e>. The
bundled ``fig2`` preset runs the four-level ion with and without it.
"""

import tempfile

from rydgate.cli import load_preset
from rydgate.experiments import run_config

cfg = load_preset("fig2")
with tempfile.TemporaryDirectory() as out:
    summary = run_config(cfg, out)

res = summary["results"]
print(f"max P_e with microwave    {res['max_P_e']:.4f}")
print(f"max P_e without microwave {res['max_P_e_no_microwave']:.4f}")
print(f"ratio                     {res['ratio']:.1f}")
print(f"final P_rS with / without {res['final_P_rS']:.4f} / {res['final_P_rS_no_microwave']:.4f}")
