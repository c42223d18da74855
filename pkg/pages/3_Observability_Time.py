# pages/3_Observability_Time.py
import numpy as np
import pandas as pd
import streamlit as st

from errors import AutonomyError, ConfigError, ExprError, ProblemError
from obstime import (
    NEVER,
    autonomous_bound,
    check_strengthened_condition,
    check_time_condition,
    classification_frame,
    classify_initial_times,
    min_observability_time,
    threshold,
)
from run_utils import build_problem, parse_config, problem_editor

st.title("Observability time")
st.caption("T* is the smallest T with ∫_{t0}^{t0+T} min_x c(t, x, 0, 0, 0) dt equal to L (two-sided) or 2L (one-sided).")

section = problem_editor(st.session_state.get("default_catalog", "nonauto-sin"))
try:
    p = build_problem(parse_config({"problem": section}))
except (ConfigError, ExprError, ProblemError) as e:
    st.error(f"Invalid problem ({e.module}): {e}")
    st.stop()

mode = st.radio("Mode", ["two_sided", "one_sided"], horizontal=True)
horizon = st.number_input("Search horizon", value=float(p.horizon), min_value=1e-3)

# ───────────────────────────── single t0 ─────────────────────────────
T_star = min_observability_time(p, p.t0, mode, horizon)
if T_star == NEVER:
    st.error(f"Never observable within T ≤ {horizon:g} from t0 = {p.t0:g}.")
else:
    st.metric("T*", f"{T_star:.8f}")

try:
    st.caption(f"Autonomous bound sup_x {threshold(p, mode):g}/c(x): {autonomous_bound(p, mode):.6g}")
except AutonomyError:
    pass    # c depends on t

T = st.number_input("Check a given T", value=float(T_star) * 1.05 if T_star != NEVER else float(horizon))
cond = check_time_condition(p, p.t0, T, mode)
strong = check_strengthened_condition(p, p.t0, T, mode=mode)
st.write(pd.DataFrame([{
    "T": T, "integral": cond.integral_value, "threshold": cond.threshold, "status": cond.status,
    "strengthened integral (ε)": strong.integral_value, "strengthened passed": strong.passed,
}]))

# ───────────────────────────── t0 sweep ─────────────────────────────
st.subheader("Classify initial times")
lo, hi = st.slider("t0 range", -5.0, 20.0, (0.0, 5.0))
num = int(st.number_input("Points", value=21, min_value=2, max_value=201))

if st.button("Classify"):
    with st.spinner("Bisecting for T* at each t0 …"):
        c = classify_initial_times(p, np.linspace(lo, hi, num), mode, horizon)
    frame = classification_frame(c)
    st.info(f"Observable for **{c.label}** of the sampled initial times.")
    st.dataframe(frame, use_container_width=True)
    st.download_button(
        "⬇️ classification.csv",
        frame.to_csv(index=False).encode("utf-8"),
        file_name="classification.csv",
        mime="text/csv",
    )
