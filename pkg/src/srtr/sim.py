"""Desk-scale 2D scenario simulators for three RSMs: a soccer attacker, a
one-touch-pass deflector, and a differential-drive docking robot.

Controllers are deliberately simple proportional / bang-bang loops; they are
treated as correct black boxes.  All physics constants live in ``Physics``
and every run is a pure function of (rsm, scenario, max_steps).
"""

from __future__ import annotations

import importlib.resources
import itertools
import json
import math
import random
from dataclasses import asdict, dataclass, field

from .errors import GridTooLargeError
from .formats import parse_params
from .interp import RSM, run_rsm, step_transition
from .parser import parse_rsm
from .syntax import Correction, ParamMap, Trace, TraceElement, TransitionFn, Value, Vec2

KINDS = ("attacker", "deflector", "docker")

GOAL_SCORED = "GoalScored"
DEFLECTED = "Deflected"
DOCKED = "Docked"
TIMEOUT = "Timeout"
OUT_OF_BOUNDS = "OutOfBounds"

DEFAULT_MAX_STEPS = {"attacker": 900, "deflector": 720, "docker": 1500}

_KICK_RANGE = 0.18        # attacker kicker contact radius (m)
_KICK_SPEED = 3.5         # ball speed after an attacker kick (m/s)
_STANDOFF = 0.35          # attacker approach point behind the ball (m)
_HEADING_BAND = 0.01      # bang-bang heading deadband (rad)
_DEFLECT_RANGE = 0.12     # deflector contact radius (m)
_DEFLECT_SPEED = 2.5      # ball speed after a deflection (m/s)
_TRACK = 0.3              # docker wheel track (m)
_DOCK_POS_TOL = 0.25      # physical docking box (m)
_DOCK_ANG_TOL = 0.4       # physical docking heading tolerance (rad)


@dataclass(frozen=True)
class Physics:
    timestep: float = 1.0 / 60.0
    ball_friction: float = 0.3      # m/s^2 deceleration
    robot_max_speed: float = 2.0    # m/s
    robot_max_omega: float = 3.0    # rad/s

    def __post_init__(self):
        assert self.timestep > 0 and self.ball_friction >= 0


@dataclass(frozen=True)
class Scenario:
    kind: str
    seed: int = 0
    ball: Vec2 = (0.0, 0.0)
    ball_vel: Vec2 = (0.0, 0.0)
    robot: tuple[float, float, float] = (0.0, 0.0, 0.0)   # x, y, heading
    post: Vec2 = (0.0, 0.0)            # deflector receive post
    charger: tuple[float, float, float] = (2.2, 0.0, 0.0)  # docker target pose
    field_half: Vec2 = (3.0, 2.0)
    goal_x: float = 3.0
    goal_half_width: float = 0.8
    physics: Physics = field(default_factory=Physics)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @staticmethod
    def from_json(source: str) -> "Scenario":
        raw = json.loads(source)
        phys = Physics(**raw.pop("physics", {}))
        for key in ("ball", "ball_vel", "robot", "post", "charger", "field_half"):
            if key in raw:
                raw[key] = tuple(raw[key])
        return Scenario(physics=phys, **raw)


@dataclass
class Outcome:
    success: bool
    trace: Trace
    reason: str


# ---------------------------------------------------------------------------
# vector helpers

def _unit(v: Vec2) -> Vec2:
    n = math.hypot(v[0], v[1])
    if n < 1e-12:
        return (0.0, 0.0)
    return (v[0] / n, v[1] / n)


def _clamp_speed(v: Vec2, vmax: float) -> Vec2:
    n = math.hypot(v[0], v[1])
    if n <= vmax or n < 1e-12:
        return v
    return (v[0] * vmax / n, v[1] * vmax / n)


def _anglemod(x: float) -> float:
    return x - 2.0 * math.pi * math.ceil((x - math.pi) / (2.0 * math.pi))


# ---------------------------------------------------------------------------
# worlds

class _BallWorld:
    """Shared ball physics: friction deceleration, goal and bounds checks."""

    def __init__(self, sc: Scenario):
        self.sc = sc
        self.dt = sc.physics.timestep
        self.ball = sc.ball
        self.ball_vel = sc.ball_vel
        self.t = 0.0
        self.reason: str | None = None

    def roll_ball(self):
        old = self.ball
        self.ball = (old[0] + self.ball_vel[0] * self.dt,
                     old[1] + self.ball_vel[1] * self.dt)
        speed = math.hypot(*self.ball_vel)
        if speed > 0:
            drop = self.sc.physics.ball_friction * self.dt
            scale = max(0.0, speed - drop) / speed
            self.ball_vel = (self.ball_vel[0] * scale, self.ball_vel[1] * scale)
        self._check_ball(old, self.ball)

    def _check_ball(self, old: Vec2, new: Vec2):
        if self.reason is not None:
            return
        sc = self.sc
        if old[0] < sc.goal_x <= new[0]:
            frac = (sc.goal_x - old[0]) / (new[0] - old[0])
            y = old[1] + frac * (new[1] - old[1])
            if abs(y) <= sc.goal_half_width:
                self.reason = GOAL_SCORED
                return
        if abs(new[0]) > sc.field_half[0] or abs(new[1]) > sc.field_half[1]:
            self.reason = OUT_OF_BOUNDS


class AttackerWorld(_BallWorld):
    def __init__(self, sc: Scenario):
        super().__init__(sc)
        self.robot = (sc.robot[0], sc.robot[1])
        self.heading = sc.robot[2]

    def sense(self) -> dict[str, Value]:
        goal = (self.sc.goal_x, 0.0)
        target = math.atan2(goal[1] - self.robot[1], goal[0] - self.robot[0])
        return {
            "ballLoc": self.ball,
            "robotLoc": self.robot,
            "robotAng": self.heading,
            "targetAng": target,
            "time": self.t,
        }

    def emission(self, state: str, ins: dict, vars_: dict):
        sc = self.sc
        dt = self.dt
        vmax = sc.physics.robot_max_speed
        vars_ = dict(vars_)
        vel = (0.0, 0.0)
        omega = 0.0
        if state == "GOTO":
            goal = (sc.goal_x, 0.0)
            u = _unit((goal[0] - self.ball[0], goal[1] - self.ball[1]))
            standoff = (self.ball[0] - _STANDOFF * u[0], self.ball[1] - _STANDOFF * u[1])
            vel = _clamp_speed((2.5 * (standoff[0] - self.robot[0]),
                                2.5 * (standoff[1] - self.robot[1])), vmax)
            err = _anglemod(ins["targetAng"] - self.heading)
            if abs(err) > _HEADING_BAND:
                omega = math.copysign(sc.physics.robot_max_omega, err)
            vars_["timeInKick"] = 0.0
        elif state == "KICK":
            # full-speed lunge at the ball, still steering toward the target
            u = _unit((self.ball[0] - self.robot[0], self.ball[1] - self.robot[1]))
            vel = (vmax * u[0], vmax * u[1])
            err = _anglemod(ins["targetAng"] - self.heading)
            if abs(err) > _HEADING_BAND:
                omega = math.copysign(sc.physics.robot_max_omega, err)
            vars_["timeInKick"] = vars_["timeInKick"] + dt
            if math.dist(self.robot, self.ball) < _KICK_RANGE:
                # the kicker imparts velocity along the robot heading
                self.ball_vel = (_KICK_SPEED * math.cos(self.heading),
                                 _KICK_SPEED * math.sin(self.heading))
                vars_["lastKick"] = self.t
        outputs = {"vel": vel, "omega": omega}
        self.robot = (self.robot[0] + vel[0] * dt, self.robot[1] + vel[1] * dt)
        self.heading = _anglemod(self.heading + omega * dt)
        self.roll_ball()
        self.t += dt
        return outputs, vars_

    def finish(self, last_state: str, budget: int) -> str:
        for _ in range(budget):
            if self.reason is not None:
                break
            if math.hypot(*self.ball_vel) < 1e-6:
                break
            self.roll_ball()
        if self.reason == GOAL_SCORED:
            return GOAL_SCORED
        return self.reason or TIMEOUT

    def succeeded(self, reason: str) -> bool:
        return reason == GOAL_SCORED


class DeflectorWorld(_BallWorld):
    def __init__(self, sc: Scenario):
        super().__init__(sc)
        self.robot = (sc.robot[0], sc.robot[1])
        self.deflected = False

    def sense(self) -> dict[str, Value]:
        rel = (self.ball[0] - self.robot[0], self.ball[1] - self.robot[1])
        dist = math.hypot(*rel)
        u = _unit(rel)
        closing = -(self.ball_vel[0] * u[0] + self.ball_vel[1] * u[1])
        return {
            "ballDist": dist,
            "closingSpeed": closing,
            "setupErr": math.dist(self.robot, self.sc.post),
            "time": self.t,
        }

    def emission(self, state: str, ins: dict, vars_: dict):
        sc = self.sc
        dt = self.dt
        vmax = sc.physics.robot_max_speed
        vars_ = dict(vars_)
        vel = (0.0, 0.0)
        if state == "SETUP":
            vel = _clamp_speed((2.5 * (sc.post[0] - self.robot[0]),
                                2.5 * (sc.post[1] - self.robot[1])), vmax)
            vars_["timeInKick"] = 0.0
        elif state == "WAIT":
            vars_["timeInKick"] = 0.0
        elif state == "KICK":
            u = _unit((self.ball[0] - self.robot[0], self.ball[1] - self.robot[1]))
            vel = (vmax * u[0], vmax * u[1])
            vars_["timeInKick"] = vars_["timeInKick"] + dt
            if not self.deflected and math.dist(self.robot, self.ball) < _DEFLECT_RANGE:
                goal = (sc.goal_x, 0.0)
                u = _unit((goal[0] - self.ball[0], goal[1] - self.ball[1]))
                self.ball_vel = (_DEFLECT_SPEED * u[0], _DEFLECT_SPEED * u[1])
                self.deflected = True
        outputs = {"vel": vel}
        self.robot = (self.robot[0] + vel[0] * dt, self.robot[1] + vel[1] * dt)
        self.roll_ball()
        self.t += dt
        return outputs, vars_

    def finish(self, last_state: str, budget: int) -> str:
        if self.deflected:
            return DEFLECTED
        for _ in range(budget):
            if self.reason is not None or math.hypot(*self.ball_vel) < 1e-6:
                break
            self.roll_ball()
        return self.reason or TIMEOUT

    def succeeded(self, reason: str) -> bool:
        return reason == DEFLECTED


class DockerWorld:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.dt = sc.physics.timestep
        self.pos = (sc.robot[0], sc.robot[1])
        self.heading = sc.robot[2]
        self.t = 0.0
        cx, cy, ca = sc.charger
        self.charger = (cx, cy)
        self.charger_heading = ca
        self.stage = (cx - 0.6 * math.cos(ca), cy - 0.6 * math.sin(ca))

    def sense(self) -> dict[str, Value]:
        def bearing(target):
            ang = math.atan2(target[1] - self.pos[1], target[0] - self.pos[0])
            return _anglemod(ang - self.heading)
        return {
            "stageBearing": bearing(self.stage),
            "stageDist": math.dist(self.pos, self.stage),
            "chargerBearing": bearing(self.charger),
            "chargerDist": math.dist(self.pos, self.charger),
            "headingErr": _anglemod(self.charger_heading - self.heading),
        }

    def emission(self, state: str, ins: dict, vars_: dict):
        sc = self.sc
        wl = wr = 0.0
        if state == "S1LEFT":
            wl, wr = -0.45, 0.45
        elif state == "S1RIGHT":
            wl, wr = 0.45, -0.45
        elif state == "S1FORWARD":
            v = min(sc.physics.robot_max_speed, max(0.1, 1.5 * ins["stageDist"]))
            wl = wr = v
        elif state == "S2LEFT":
            wl, wr = -0.3, 0.3
        elif state == "S2RIGHT":
            wl, wr = 0.3, -0.3
        elif state == "S2FORWARD":
            v = min(0.5, max(0.05, 1.2 * ins["chargerDist"]))
            wl = wr = v
        v = (wl + wr) / 2.0
        omega = (wr - wl) / _TRACK
        self.pos = (self.pos[0] + v * math.cos(self.heading) * self.dt,
                    self.pos[1] + v * math.sin(self.heading) * self.dt)
        self.heading = _anglemod(self.heading + omega * self.dt)
        self.t += self.dt
        return {"wheels": (wl, wr)}, dict(vars_)

    def finish(self, last_state: str, budget: int) -> str:
        docked = (last_state == "END"
                  and math.dist(self.pos, self.charger) <= _DOCK_POS_TOL
                  and abs(_anglemod(self.charger_heading - self.heading)) <= _DOCK_ANG_TOL)
        return DOCKED if docked else TIMEOUT

    def succeeded(self, reason: str) -> bool:
        return reason == DOCKED


_WORLDS = {"attacker": AttackerWorld, "deflector": DeflectorWorld, "docker": DockerWorld}


# ---------------------------------------------------------------------------
# packaged RSM fixtures

def rsm_source(kind: str) -> str:
    return importlib.resources.files("srtr.rsms").joinpath(f"{kind}.rsm").read_text()


def load_fn(kind: str) -> TransitionFn:
    return parse_rsm(rsm_source(kind))


def default_params(kind: str) -> ParamMap:
    text = importlib.resources.files("srtr.rsms").joinpath(f"{kind}_params.json").read_text()
    return parse_params(text, load_fn(kind))


def detuned_params(kind: str) -> ParamMap:
    text = importlib.resources.files("srtr.rsms").joinpath(f"{kind}_detuned.json").read_text()
    return parse_params(text, load_fn(kind))


def make_rsm(kind: str, params: ParamMap | None = None) -> RSM:
    fn = load_fn(kind)
    return RSM(fn, dict(params) if params is not None else default_params(kind))


# ---------------------------------------------------------------------------
# scenario generation

def gen_scenarios(seed: int, n: int, kind: str,
                  speed_range: tuple[float, float] = (0.8, 1.4)) -> list[Scenario]:
    """Deterministic batch of random scenarios for one RSM kind."""
    rng = random.Random(f"{seed}:{kind}")
    out = []
    for i in range(n):
        if kind == "attacker":
            sc = Scenario(
                kind=kind, seed=seed,
                ball=(rng.uniform(-1.8, 2.3), rng.uniform(-1.5, 1.5)),
                ball_vel=(0.0, 0.0),
                robot=(-2.4, rng.uniform(-1.0, 1.0), rng.uniform(-math.pi, math.pi)),
            )
        elif kind == "deflector":
            post = (rng.uniform(-0.5, 0.8), rng.uniform(-1.0, 1.0))
            # ball passes the post at a 0.15..0.3 m lateral offset, fast enough
            # to still be moving at arrival despite friction
            approach = rng.uniform(0, 2 * math.pi)
            offset = rng.uniform(0.15, 0.3) * rng.choice((-1.0, 1.0))
            perp = (math.cos(approach + math.pi / 2), math.sin(approach + math.pi / 2))
            aim = (post[0] + offset * perp[0], post[1] + offset * perp[1])
            dist = rng.uniform(1.6, 2.4)
            start = (aim[0] - dist * math.cos(approach), aim[1] - dist * math.sin(approach))
            speed = rng.uniform(1.3, 1.8)
            sc = Scenario(
                kind=kind, seed=seed,
                ball=start,
                ball_vel=(speed * math.cos(approach), speed * math.sin(approach)),
                robot=(post[0] + rng.uniform(-0.5, 0.5), post[1] + rng.uniform(-0.5, 0.5), 0.0),
                post=post,
                field_half=(4.0, 3.5),
            )
        elif kind == "docker":
            sc = Scenario(
                kind=kind, seed=seed,
                robot=(rng.uniform(-2.5, 0.8), rng.uniform(-1.5, 1.5),
                       rng.uniform(-math.pi, math.pi)),
            )
        else:
            raise ValueError(f"unknown scenario kind {kind!r}")
        out.append(sc)
    return out


def heatmap_scenarios(kind: str = "attacker", nx: int = 10, ny: int = 10,
                      angles: int = 12, speed: float = 0.8) -> list[Scenario]:
    """Grid of initial ball positions x uniformly distributed velocity angles."""
    out = []
    xs = [-1.8 + (2.3 - -1.8) * i / max(nx - 1, 1) for i in range(nx)]
    ys = [-1.5 + 3.0 * j / max(ny - 1, 1) for j in range(ny)]
    for x, y in itertools.product(xs, ys):
        for k in range(angles):
            ang = 2 * math.pi * k / angles
            out.append(Scenario(
                kind=kind, seed=0,
                ball=(x, y),
                ball_vel=(speed * math.cos(ang), speed * math.sin(ang)),
                robot=(-2.4, 0.0, 0.0),
            ))
    return out


def heat_key(sc: Scenario) -> tuple[float, float, float]:
    """(x, y, angle) row key for heat-map CSV export."""
    if sc.kind == "docker":
        return (sc.robot[0], sc.robot[1], sc.robot[2])
    angle = math.atan2(sc.ball_vel[1], sc.ball_vel[0]) if any(sc.ball_vel) else 0.0
    return (sc.ball[0], sc.ball[1], angle)


# ---------------------------------------------------------------------------
# running

def simulate(rsm: RSM, sc: Scenario, max_steps: int | None = None) -> Outcome:
    """Closed-loop run: sense -> transition -> emit -> integrate physics."""
    budget = max_steps if max_steps is not None else DEFAULT_MAX_STEPS[sc.kind]
    world = _WORLDS[sc.kind](sc)

    def stream():
        for _ in range(budget):
            if getattr(world, "reason", None) is not None:
                return
            yield world.sense()

    wired = RSM(rsm.transition, dict(rsm.params), world.emission,
                init_vars=dict(rsm.init_vars), start=rsm.start)
    trace = run_rsm(wired, stream(), budget)
    last_state = trace[-1].state if trace else wired.transition.start
    reason = world.finish(last_state, budget)
    return Outcome(world.succeeded(reason), trace, reason)


def success_rate(rsm: RSM, scenarios: list[Scenario],
                 max_steps: int | None = None) -> tuple[float, list[Outcome]]:
    """Fraction of scenarios whose outcome succeeded, plus the outcomes."""
    outcomes = [simulate(rsm, sc, max_steps) for sc in scenarios]
    rate = sum(o.success for o in outcomes) / len(outcomes) if outcomes else 0.0
    return rate, outcomes


def propose_corrections(fn: TransitionFn, base: ParamMap, reference: ParamMap,
                        trace: Trace, limit: int = 3) -> list[Correction]:
    """Label steps where a reference parameter map disagrees with the base.

    Stands in for the human reviewer in experiments: the expected state is
    the one the reference parameters would have produced.
    """
    out: list[Correction] = []
    for tau in trace:
        if len(out) >= limit:
            break
        got = step_transition(fn, tau, base)
        want = step_transition(fn, tau, reference)
        if got != want:
            out.append(Correction(tau.t, want))
    return out


def exhaustive_search(fn: TransitionFn, base_params: ParamMap,
                      param_grid: dict[str, list[float]],
                      labeled: list[tuple[TraceElement, str]],
                      max_points: int = 10_000_000) -> ParamMap:
    """Grid search maximizing satisfied labels; first grid point wins ties.

    Comparison oracle only; the point count is capped to keep it honest.
    """
    names = list(param_grid)
    sizes = [len(param_grid[n]) for n in names]
    total = math.prod(sizes) if sizes else 1
    if total > max_points:
        raise GridTooLargeError(f"{total} grid points exceeds cap {max_points}")
    best_params: ParamMap | None = None
    best_score = -1
    for combo in itertools.product(*(param_grid[n] for n in names)):
        params = dict(base_params)
        params.update(dict(zip(names, combo)))
        score = sum(1 for tau, want in labeled if step_transition(fn, tau, params) == want)
        if score > best_score:
            best_score = score
            best_params = params
    return best_params if best_params is not None else dict(base_params)
