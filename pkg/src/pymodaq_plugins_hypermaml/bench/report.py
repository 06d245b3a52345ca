import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd

from pymodaq_plugins_hypermaml.errors import ConfigError

CSV_COLUMNS = ['variant', 'episodes', 'accuracy_mean', 'accuracy_ci95', 'time_mean_s', 'time_std_s', 'seed']
CI_METHOD = 'normal95-ddof0'
FORMATS = ('csv', 'json')


def ci95(values: Sequence[float]) -> float:
    """Radius of the normal-approximation 95% interval of the mean, 1.96·std/√n (population std)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    return float(1.96 * np.std(values) / np.sqrt(values.size))


@dataclass
class Report:
    variant: str
    accuracies: List[float] = field(default_factory=list)
    times: List[float] = field(default_factory=list)
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.accuracies = [float(a) for a in self.accuracies]
        self.times = [float(t) for t in self.times]
        if any(not 0.0 <= a <= 1.0 for a in self.accuracies):
            raise ValueError(f"{self.variant}: accuracies must lie in [0, 1]")
        self.metadata.setdefault('ci', CI_METHOD)

    @property
    def episodes(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies)) if self.accuracies else float('nan')

    @property
    def ci95(self) -> float:
        return ci95(self.accuracies)

    @property
    def time_mean(self) -> float:
        return float(np.mean(self.times)) if self.times else float('nan')

    @property
    def time_std(self) -> float:
        return float(np.std(self.times)) if self.times else float('nan')

    def summary(self) -> str:
        text = f"{self.variant}: {100 * self.mean:.2f} ± {100 * self.ci95:.2f}% over {self.episodes} episodes"
        if self.times:
            text += f", {self.time_mean:.3f} ± {self.time_std:.3f} s"
        return text

    def row(self) -> dict:
        return {'variant': self.variant, 'episodes': self.episodes, 'accuracy_mean': self.mean,
                'accuracy_ci95': self.ci95, 'time_mean_s': self.time_mean, 'time_std_s': self.time_std,
                'seed': self.metadata.get('seed')}

    def to_dict(self) -> dict:
        data = asdict(self)
        data.update(mean=self.mean, ci95=self.ci95, time_mean=self.time_mean, time_std=self.time_std)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'Report':
        return cls(data['variant'], data.get('accuracies', []), data.get('times', []), data.get('metadata', {}))


def write_report(reports: Union[Report, Sequence[Report]], path: Union[str, Path], fmt: str = None) -> Path:
    """Write one or several reports as csv (one row per variant) or json (lossless)."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip('.').lower()
    if fmt not in FORMATS:
        raise ConfigError(f"unknown report format {fmt!r}, expected one of {FORMATS}")
    reports = [reports] if isinstance(reports, Report) else list(reports)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        pd.DataFrame([r.row() for r in reports], columns=CSV_COLUMNS).to_csv(path, index=False)
    else:
        path.write_text(json.dumps([r.to_dict() for r in reports], indent=2, allow_nan=True))
    return path


def read_report(path: Union[str, Path]) -> List[Report]:
    data = json.loads(Path(path).read_text())
    return [Report.from_dict(item) for item in data]
