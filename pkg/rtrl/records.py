from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import numpy as np
import pandas as pd
from utils.files import write_csv_atomic

TRIAL_COLUMNS = ['t', 'theta_dist', 'loss', 'grad_norm', 'aborted']


@dataclass
class TrialRecord:
    """Per-step time series of one learning run.

    Row 0 is the initial parameter at t=0. An aborted run ends with a row at
    the abort time whose aborted flag is 1 and whose numeric columns are NaN.
    Gradient norms are always recorded, full gradients only with
    keep_gradients.
    """
    theta_star: Optional[np.ndarray] = None
    config_hash: str = ''
    t: List[int] = field(default_factory=list)
    thetas: List[np.ndarray] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    grad_norms: List[float] = field(default_factory=list)
    aborted: List[int] = field(default_factory=list)
    interval_k: List[int] = field(default_factory=list)
    gradients: List[np.ndarray] = field(default_factory=list)
    keep_gradients: bool = False
    diagnostics: Dict[str, List[float]] = field(default_factory=dict)
    states: List[Any] = field(default_factory=list)
    abort_t: Optional[int] = None
    abort_stage: Optional[str] = None

    def append(self, t, theta, loss=float('nan'), grad=None, interval_k=None):
        self.t.append(int(t))
        self.thetas.append(np.array(theta, dtype=float))
        self.losses.append(float(loss))
        if grad is None:
            self.grad_norms.append(0.0)
        else:
            if self.keep_gradients:
                self.gradients.append(np.array(grad, dtype=float))
            self.grad_norms.append(float(np.linalg.norm(grad)))
        self.aborted.append(0)
        if interval_k is not None:
            self.interval_k.append(int(interval_k))

    def add_diagnostic(self, name, value):
        self.diagnostics.setdefault(name, []).append(float(value))

    def abort(self, t, stage):
        self.abort_t = int(t)
        self.abort_stage = stage
        self.t.append(int(t))
        self.thetas.append(np.full_like(self.thetas[-1], np.nan) if self.thetas else np.array([np.nan]))
        self.losses.append(float('nan'))
        self.grad_norms.append(float('nan'))
        self.aborted.append(1)
        if self.interval_k:
            self.interval_k.append(self.interval_k[-1] + 1)

    @property
    def is_aborted(self):
        return self.abort_t is not None

    @property
    def final_theta(self):
        """Last finite parameter"""
        for theta in reversed(self.thetas):
            if np.all(np.isfinite(theta)):
                return theta
        return None

    def theta_dist(self, theta_star=None) -> np.ndarray:
        theta_star = self.theta_star if theta_star is None else theta_star
        if theta_star is None:
            return np.full(len(self.t), np.nan)
        theta_star = np.asarray(theta_star, dtype=float)
        return np.array([np.linalg.norm(theta - theta_star) for theta in self.thetas])

    def final_dist(self, theta_star=None) -> float:
        dists = self.theta_dist(theta_star)
        finite = dists[np.isfinite(dists)]
        if self.is_aborted or finite.size == 0:
            return float('nan')
        return float(finite[-1])

    def to_frame(self, theta_star=None) -> pd.DataFrame:
        frame = pd.DataFrame({
            't': self.t,
            'theta_dist': self.theta_dist(theta_star),
            'loss': self.losses,
            'grad_norm': self.grad_norms,
            'aborted': self.aborted,
        })
        if self.interval_k:
            frame['interval_k'] = self.interval_k
        return frame

    def to_csv(self, path, theta_star=None) -> str:
        return write_csv_atomic(self.to_frame(theta_star), path)
