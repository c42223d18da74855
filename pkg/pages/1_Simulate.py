# pages/1_Simulate.py
"""
Forward mixed solve.

Key points
──────────
• Problem from the catalog, optionally edited in the sidebar
• nx defaults to the CFL-limited count for the chosen nt
• Compatibility residuals and the smallness guard are reported, not enforced
• Artifacts land in <out_dir>/<run name>, same layout as `waveobs simulate`
"""

from __future__ import annotations

from pathlib import Path

import pandas as pd
import streamlit as st

from errors import ConfigError, ExprError, ProblemError, WaveObsError
from run_utils import grid_editor, parse_config, problem_editor, valid_run
from waveobs import run_command

st.title("Simulate")

out_dir = st.session_state.get("out_dir", "runs")
section = problem_editor(st.session_state.get("default_catalog", "linear-unit"))
grid = grid_editor(T=2.0, nt=400)

run_name = st.text_input("Run name", "simulate")
every = int(st.number_input("Keep every n-th time level in field.csv", value=4, min_value=1))

if st.button("Run forward solve", type="primary"):
    if not valid_run(run_name):
        st.error("Run name must start with a letter and contain only letters, digits, '_' or '-'.")
        st.stop()
    target = Path(out_dir) / run_name
    try:
        cfg = parse_config({"problem": section, "grid": grid, "options": {"every": every}, "out": str(target)})
        with st.spinner("Solving …"):
            run_command("simulate", cfg, target)
    except (ConfigError, ExprError, ProblemError) as e:
        st.error(f"Invalid problem ({e.module}): {e}")
        st.stop()
    except WaveObsError as e:
        st.error(f"Solve failed ({e.module}): {e}")
        st.stop()
    st.session_state.simulate_target = str(target)

if "simulate_target" not in st.session_state:
    st.stop()

target = Path(st.session_state.simulate_target)
run_name = target.name
st.success(f"Written to `{target}`")

# ───────────────────────────── field ─────────────────────────────
field = pd.read_csv(target / "field.csv")
levels = sorted(field["t"].unique())
t_pick = st.select_slider("Time level", options=levels, value=levels[-1])
st.dataframe(field[field["t"] == t_pick].set_index("x")[["u", "u_x", "u_t"]], use_container_width=True)

st.subheader("Boundary behaviour")
for side, x in (("left", field["x"].min()), ("right", field["x"].max())):
    st.markdown(f"**x = {x:g}** ({side})")
    st.dataframe(field[field["x"] == x].set_index("t")[["u", "u_x", "u_t"]], use_container_width=True)

# ─────────────────────────── diagnostics ───────────────────────────
st.subheader("Compatibility at the corners")
compat = pd.read_csv(target / "compatibility.csv")
st.dataframe(compat, use_container_width=True)
if "passed" in compat.columns and not compat["passed"].all():
    st.warning("Some compatibility conditions fail; expect a kink propagating from the corner.")

st.download_button(
    "⬇️ field.csv",
    (target / "field.csv").read_bytes(),
    file_name=f"{run_name}_field.csv",
    mime="text/csv",
)
