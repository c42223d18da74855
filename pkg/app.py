# app.py
import streamlit as st

from run_utils import __version__, dashboard_settings, setup_logging

# ─────────────────── Page config ───────────────────
st.set_page_config(
    page_title="waveobs",
    layout="wide",
    initial_sidebar_state="expanded",
)

setup_logging("INFO")
settings = dashboard_settings()
st.session_state.setdefault("out_dir", settings["out_dir"])
st.session_state.setdefault("default_catalog", settings["default_catalog"])

# ─────────────────── Main landing page ───────────────────
st.title("waveobs 〰️")
st.caption(f"version {__version__}")
st.markdown(
    """
Boundary observability and initial-data reconstruction for
u_tt − c(t, x, u, u_x, u_t)² u_xx = f on [0, L]. Use the sidebar to:

1. **Simulate** a mixed initial-boundary problem and inspect the field
2. **Reconstruct** (φ, ψ) from boundary observations, two-sided or one-sided
3. Compute the **observability time** T* and classify initial times
4. **Browse runs**: preview, download and replay earlier results

Runs are written below **`out_dir`** (default `runs/`), configurable in
**`.streamlit/secrets.toml`** under a `[dashboard]` block together with `default_catalog`.
The same runs can be produced headless with `python waveobs.py <command> --config run.json`.
"""
)
st.info(f"Output directory: `{st.session_state.out_dir}`. Pick a page from the sidebar ⬅️ to get started.")
