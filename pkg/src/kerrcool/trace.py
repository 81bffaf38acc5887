"""Gridded power-spectral-density container shared by the theory and analysis code."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional

import numpy as np
from scipy.integrate import trapezoid


@dataclass(frozen=True)
class SpectrumTrace:
    """PSD samples on an ordinary-frequency grid (Hz).

    ``metadata["units"]`` names the PSD unit, e.g. ``"quanta/Hz"``,
    ``"xzpm^2/Hz"`` or ``"W"`` for raw analyser power per ENBW bin.
    """

    freq: np.ndarray
    psd: np.ndarray
    enbw: float = 1.0
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        freq = np.asarray(self.freq, dtype=float)
        psd = np.asarray(self.psd)
        if freq.ndim != 1 or psd.shape != freq.shape:
            raise ValueError("freq and psd must be 1-D arrays of equal length")
        if freq.size > 1 and not np.all(np.diff(freq) > 0):
            raise ValueError("freq must be strictly increasing")
        if np.iscomplexobj(psd) or not np.all(np.isfinite(psd)):
            raise ValueError("psd must be finite and real")
        if not self.enbw > 0:
            raise ValueError("enbw must be positive")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "psd", psd.astype(float))

    @property
    def units(self) -> str:
        return str(self.metadata.get("units", ""))

    def area(self, band: Optional[tuple[float, float]] = None) -> float:
        """Trapezoidal integral of the PSD over frequency (optionally within ``band``)."""
        f, p = self.freq, self.psd
        if band is not None:
            sel = (f >= band[0]) & (f <= band[1])
            f, p = f[sel], p[sel]
        return float(trapezoid(p, f))

    def with_psd(self, psd: np.ndarray, **meta: Any) -> "SpectrumTrace":
        return replace(self, psd=np.asarray(psd, dtype=float), metadata={**self.metadata, **meta})

    def window(self, lo: float, hi: float) -> "SpectrumTrace":
        sel = (self.freq >= lo) & (self.freq <= hi)
        return replace(self, freq=self.freq[sel], psd=self.psd[sel])


def write_csv(trace: SpectrumTrace, path: Path | str, header: Optional[list[str]] = None) -> None:
    """Write ``freq_hz,psd`` rows; leading ``#`` lines carry ENBW and metadata."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in header or []:
            fh.write(f"# {line}\n")
        fh.write(f"# enbw_hz={trace.enbw!r}\n")
        fh.write(f"# metadata={json.dumps(trace.metadata, default=str, sort_keys=True)}\n")
        w = csv.writer(fh)
        w.writerow(["freq_hz", "psd"])
        for f, p in zip(trace.freq, trace.psd):
            w.writerow([repr(float(f)), repr(float(p))])


def read_csv(path: Path | str, enbw: Optional[float] = None) -> SpectrumTrace:
    """Read a spectrum CSV (``freq_hz,psd``).

    ENBW and units come from ``#`` header lines or from a ``<name>.json``
    sidecar holding ``enbw_hz`` and ``units``; an explicit ``enbw`` wins.
    """
    path = Path(path)
    meta: dict[str, Any] = {}
    found_enbw = None
    rows: list[tuple[float, float]] = []
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("enbw_hz="):
                    found_enbw = float(body.split("=", 1)[1])
                elif body.startswith("metadata="):
                    meta.update(json.loads(body.split("=", 1)[1]))
                continue
            if line.lower().startswith("freq"):
                continue
            f, p = line.split(",")[:2]
            rows.append((float(f), float(p)))
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        side = json.loads(sidecar.read_text())
        if "enbw_hz" in side:
            found_enbw = float(side["enbw_hz"])
        if "units" in side:
            meta["units"] = side["units"]
    if enbw is not None:
        found_enbw = enbw
    arr = np.array(rows, dtype=float).reshape(-1, 2)
    return SpectrumTrace(arr[:, 0], arr[:, 1], enbw=found_enbw or 1.0, metadata=meta)
