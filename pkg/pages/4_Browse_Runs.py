# pages/4_Browse_Runs.py
"""
Browse, download and replay earlier runs.

Key points
──────────
• A run is any directory below out_dir holding a manifest.json
• Replay re-executes the recorded command with the recorded config and seed
  into <run>_replay, so CSVs can be compared byte-for-byte
"""

from __future__ import annotations

import json
from pathlib import Path

import pandas as pd
import streamlit as st

from errors import WaveObsError
from run_utils import list_runs, read_manifest
from waveobs import replay_manifest

st.title("Browse runs")

out_dir = st.session_state.get("out_dir", "runs")
runs = list_runs(out_dir)
if not runs:
    st.info(f"No runs under `{out_dir}` yet.")
    st.stop()

run = st.selectbox("Run", runs, format_func=lambda p: str(Path(p).relative_to(out_dir)) if p != Path(out_dir) else ".")
manifest = read_manifest(Path(run) / "manifest.json")

c1, c2, c3 = st.columns(3)
c1.metric("Command", manifest.get("command", "?"))
c2.metric("Mode", manifest.get("mode") or "–")
c3.metric("Wall time", f"{manifest.get('wall_time', 0.0):.2f} s")

with st.expander("Manifest"):
    st.code(json.dumps(manifest, indent=2), language="json")

# ───────────────────────────── artifacts ─────────────────────────────
artifacts = [a for a in manifest.get("artifacts", []) if (Path(run) / a).is_file()]
if artifacts:
    name = st.selectbox("Artifact", artifacts)
    path = Path(run) / name
    df = pd.read_csv(path)
    st.caption(f"{len(df):,} rows × {df.shape[1]} columns")
    st.dataframe(df.head(500), use_container_width=True)
    st.download_button("⬇️ Download", path.read_bytes(), file_name=f"{Path(run).name}_{name}", mime="text/csv")

# ───────────────────────────── replay ─────────────────────────────
st.subheader("Replay")
if st.button("Replay into a sibling directory"):
    target = Path(run).parent / f"{Path(run).name}_replay"
    try:
        with st.spinner("Replaying …"):
            replay_manifest(Path(run) / "manifest.json", target)
    except WaveObsError as e:
        st.error(f"Replay failed ({e.module}): {e}")
        st.stop()

    same = [a for a in artifacts if (target / a).is_file() and (target / a).read_bytes() == (Path(run) / a).read_bytes()]
    st.success(f"Replayed into `{target}`: {len(same)}/{len(artifacts)} artifacts byte-identical.")
