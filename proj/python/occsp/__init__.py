"""Online EV charging scheduling lab.

Instances, schedules and models are plain dicts in the same JSON layout the
command-line tool reads and writes. Schedules map EV id (as a string key) to
its 1-indexed start slot.
"""

import json

from . import _core
from ._core import OccspError

__all__ = [
    "OccspError",
    "Episode",
    "generate",
    "solve",
    "reopt",
    "run_policy",
    "metrics",
    "export_lp",
    "replay",
    "actions_for_schedule",
    "train_sl",
    "rollout",
    "economics",
    "gma_calibration",
    "mlp_param_count",
    "theorem_threshold",
    "exact_threshold",
    "policies",
    "serve",
]


def _dump(obj):
    return json.dumps(obj)


def generate(scenario, seed):
    """Sample an instance. `scenario` is an id 1-4 or {"id", "T", "n_evs", ...}."""
    return json.loads(_core.generate(_dump(scenario), seed))


def solve(instance, fixed=None, decide=None, time_limit=None, node_limit=None):
    """Exact minimum peak-to-valley schedule, optionally with pinned starts."""
    return json.loads(_core.solve(_dump(instance), _dump(fixed or {}), decide, time_limit, node_limit))


def run_policy(instance, policy, calibration=(), time_limit=None, node_limit=None, seed=0):
    """Schedule from a named policy (see `policies()`)."""
    cal = [_dump(c) for c in calibration]
    return json.loads(_core.run_policy(_dump(instance), policy, cal, time_limit, node_limit, seed))


def reopt(instance, time_limit=None):
    return run_policy(instance, "reopt", time_limit=time_limit)


def metrics(instance, schedule):
    """Feasibility, load profile, Max-Min, RMSE and peak of a schedule."""
    return json.loads(_core.metrics(_dump(instance), _dump(schedule)))


def export_lp(instance, fixed=None):
    return _core.export_lp(_dump(instance), _dump(fixed or {}))


def replay(instance, actions):
    """Play LEFT/RIGHT/DOWN actions from reset."""
    return json.loads(_core.replay(_dump(instance), list(actions)))


def actions_for_schedule(instance, schedule):
    return _core.actions_for_schedule(_dump(instance), _dump(schedule))


def train_sl(scenario, variant, seed, episodes, train=None, arch=None):
    """Supervised training on oracle demonstrations. Returns {"model", "log", "samples"}."""
    return json.loads(
        _core.train_sl(_dump(scenario), variant, seed, episodes, _dump(train or {}), _dump(arch or {}))
    )


def rollout(model, instance):
    return json.loads(_core.rollout(_dump(model), _dump(instance)))


def economics(baseline_peak, policy_peak, u_kw=7.0, rate=164.0, feeders=700.0):
    return json.loads(_core.economics(baseline_peak, policy_peak, u_kw, rate, feeders))


def gma_calibration():
    return json.loads(_core.gma_calibration())


mlp_param_count = _core.mlp_param_count
theorem_threshold = _core.theorem_threshold
exact_threshold = _core.exact_threshold
policies = _core.policies
serve = _core.serve


class Episode:
    """Interactive game over one instance."""

    def __init__(self, instance):
        self._ep = _core.Episode(_dump(instance))

    def step(self, action):
        return json.loads(self._ep.step(action))

    def state(self):
        return json.loads(self._ep.state())

    def image(self):
        """Rendered observation as nested lists [channel][row][col]."""
        ch, rows, cols = self._ep.image_shape()
        flat = self._ep.image()
        return [[flat[(c * rows + r) * cols:(c * rows + r + 1) * cols] for r in range(rows)] for c in range(ch)]
