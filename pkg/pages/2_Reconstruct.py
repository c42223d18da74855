# pages/2_Reconstruct.py
"""
Recover (φ, ψ) at t0 from boundary observations.

Key points
──────────
• Observations come from a forward solve of the same problem, or from an
  uploaded CSV with columns t, k_left, k_right (as written by `observe`)
• two_sided needs ∫ inf c > L, the one-sided modes > 2L; the page says so before solving
• Shows the curves x1..x4, T̃, the glued slice and the error against the true data
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd
import streamlit as st

from errors import ConfigError, DomainIntersectionError, ExprError, ProblemError, WaveObsError
from obstime import check_time_condition
from run_utils import build_problem, grid_editor, normalize_mode, parse_config, problem_editor, read_manifest, valid_run
from waveobs import run_command

st.title("Reconstruct initial data")

out_dir = st.session_state.get("out_dir", "runs")
section = problem_editor(st.session_state.get("default_catalog", "linear-unit"))
grid = grid_editor(T=2.2, nt=800)

mode = st.radio("Observed boundary", ["two_sided", "one_sided_left", "one_sided_right"], horizontal=True)
upload = st.file_uploader("Observation CSV (optional: t, k_left, k_right)", type=["csv"])
run_name = st.text_input("Run name", f"reconstruct_{mode}")

# ───────────────────────── time condition preview ─────────────────────────
try:
    cfg = parse_config({"problem": section, "grid": grid, "options": {"mode": mode}})
    p = build_problem(cfg)
    cond = check_time_condition(p, p.t0, float(grid["T"]), normalize_mode(mode))
except (ConfigError, ExprError, ProblemError) as e:
    st.error(f"Invalid problem ({e.module}): {e}")
    st.stop()

if cond.passed:
    st.success(f"∫ inf c = {cond.integral_value:.6g} > {cond.threshold:g}: determinate domains should meet.")
else:
    st.warning(f"∫ inf c = {cond.integral_value:.6g} is not above {cond.threshold:g} ({cond.status}); "
               "reconstruction will be refused.")

if st.button("Reconstruct", type="primary"):
    if not valid_run(run_name):
        st.error("Run name must start with a letter and contain only letters, digits, '_' or '-'.")
        st.stop()
    target = Path(out_dir) / run_name
    target.mkdir(parents=True, exist_ok=True)
    observations = None
    if upload is not None:
        observations = target / "uploaded_observations.csv"
        observations.write_bytes(upload.getvalue())
    cfg.out = str(target)
    try:
        with st.spinner("Sideways solves, curve tracing and backward solve …"):
            run_command("reconstruct", cfg, target, mode=mode,
                        observations=str(observations) if observations else None)
    except DomainIntersectionError as e:
        st.error(f"Not observable on this window: {e}")
        st.stop()
    except (ConfigError, ExprError, ProblemError) as e:
        st.error(f"Invalid input ({e.module}): {e}")
        st.stop()
    except WaveObsError as e:
        st.error(f"Reconstruction failed ({e.module}): {e}")
        st.stop()
    st.session_state.reconstruct_target = str(target)

if "reconstruct_target" not in st.session_state:
    st.stop()

target = Path(st.session_state.reconstruct_target)
diag = read_manifest(target / "manifest.json").get("diagnostics", {})

# ───────────────────────────── results ─────────────────────────────
c1, c2, c3, c4 = st.columns(4)
c1.metric("T̃", f"{diag.get('T_tilde', float('nan')):.4g}")
c2.metric("sup |φ̂ − φ|", f"{diag.get('error_phi', float('nan')):.2e}")
c3.metric("sup |ψ̂ − ψ|", f"{diag.get('error_psi', float('nan')):.2e}")
c4.metric("overlap mismatch", f"{diag.get('overlap_mismatch', 0.0):.2e}")
if not diag.get("guard_passed", True):
    st.warning(f"C¹ norm {diag.get('c1_bound', 0):.3g} exceeded ε = {diag.get('epsilon')}; "
               "the data left the small-data regime.")

result = pd.read_csv(target / "result.csv").set_index("x")
st.subheader("Recovered initial data")
st.dataframe(result, use_container_width=True)
if "error" in result.columns:
    st.caption(f"worst node: x = {result['error'].idxmax():.4g}")

st.subheader("Characteristic curves")
curves = pd.read_csv(target / "curves.csv")
st.dataframe(curves, use_container_width=True)
st.caption(f"S = {diag.get('S')}, overlap interval = {diag.get('overlap_interval')}")

st.download_button(
    "⬇️ result.csv",
    (target / "result.csv").read_bytes(),
    file_name=f"{target.name}_result.csv",
    mime="text/csv",
)
