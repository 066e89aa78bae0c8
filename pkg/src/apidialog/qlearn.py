"""Learned dialogue policy: fixed-width state encoding, a small feed-forward
Q-network with hand-written backpropagation, replay-buffer Q-learning against
the user simulator, and JSON checkpointing."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

import numpy as np

from apidialog.acts import (
    AGENT_ACTIONS,
    DialogueActType,
    Session,
    SessionConfig,
    apply_user_act,
    new_session,
    system_respond,
)
from apidialog.corpus import ApiDataset
from apidialog.policies import PolicyDecision
from apidialog.rewards import RewardConfig, TurnContext, training_reward
from apidialog.usersim import SimulatedUser, SimulatorParams

CHECKPOINT_FORMAT = 1

# One-hot slot orders for the encoded state. The user block reserves slot 0
# for "no user act yet"; restart (never produced by the simulator) also maps
# there.
SYSTEM_ACT_ORDER: tuple[DialogueActType, ...] = (DialogueActType.START,) + AGENT_ACTIONS
USER_ACT_ORDER: tuple[DialogueActType | None, ...] = (
    None,
    DialogueActType.PROVIDE_QUERY,
    DialogueActType.PROVIDE_KEYWORD,
    DialogueActType.REJECT_KEYWORDS,
    DialogueActType.REJECT_COMPONENTS,
    DialogueActType.UNSURE,
    DialogueActType.ELICIT_INFO_API,
    DialogueActType.ELICIT_INFO_ALL_API,
    DialogueActType.ELICIT_SUGG_API,
    DialogueActType.ELICIT_LIST_RESULTS,
    DialogueActType.USER_CHANGE_PAGE,
    DialogueActType.END,
)
SCORE_SLOTS = 10
STATE_DIM = len(SYSTEM_ACT_ORDER) + len(USER_ACT_ORDER) + 1 + SCORE_SLOTS + 1 + 1


def encode_state(session: Session) -> np.ndarray:
    """34-entry observation: one-hot last system act (9), one-hot last user
    act (12 incl. none), turn fraction, top-10 scores descending
    (zero-padded), cursor fraction, and the fraction of nonzero scores."""
    state = session.state
    x = np.zeros(STATE_DIM)

    x[SYSTEM_ACT_ORDER.index(state.last_system_act_type)] = 1.0
    user_act = state.last_user_act_type
    if user_act not in USER_ACT_ORDER:
        user_act = None
    x[len(SYSTEM_ACT_ORDER) + USER_ACT_ORDER.index(user_act)] = 1.0

    base = len(SYSTEM_ACT_ORDER) + len(USER_ACT_ORDER)
    x[base] = state.turn_count / session.config.max_turns

    scores = np.sort(state.results.scores)[::-1][:SCORE_SLOTS]
    x[base + 1 : base + 1 + len(scores)] = scores

    n = len(session.dataset)
    x[base + 1 + SCORE_SLOTS] = state.results.result_index / n
    x[base + 2 + SCORE_SLOTS] = float(np.count_nonzero(state.results.scores)) / n
    return x


@dataclass
class QNetwork:
    """Fully-connected rectifier network with an identity output layer."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "QNetwork":
        return QNetwork(
            layer_sizes=self.layer_sizes,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_network(layer_sizes=(STATE_DIM, 64, 64, len(AGENT_ACTIONS)), rng=None) -> QNetwork:
    rng = rng or np.random.default_rng(0)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        biases.append(np.zeros(fan_out))
    return QNetwork(layer_sizes=tuple(layer_sizes), weights=weights, biases=biases)


def q_forward(net: QNetwork, x: np.ndarray) -> np.ndarray:
    """Q-values for one encoding (1-d input) or a batch (2-d input)."""
    squeeze = x.ndim == 1
    a = np.atleast_2d(x)
    if a.shape[1] != net.layer_sizes[0]:
        raise ValueError(f"input dimension {a.shape[1]} != {net.layer_sizes[0]}")
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if i < last:
            a = np.maximum(a, 0.0)
    return a[0] if squeeze else a


def td_loss(net: QNetwork, states: np.ndarray, actions: np.ndarray, targets: np.ndarray) -> float:
    """Mean squared error between Q(s, a) and the fixed targets."""
    q = q_forward(net, states)
    chosen = q[np.arange(len(actions)), actions]
    return float(np.mean((chosen - targets) ** 2))


def td_gradients(
    net: QNetwork, states: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Backpropagated gradients of :func:`td_loss` for every weight/bias."""
    last = len(net.weights) - 1
    a = states
    activations = [a]
    pre_acts = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        pre_acts.append(z)
        a = np.maximum(z, 0.0) if i < last else z
        activations.append(a)

    batch = len(states)
    q = activations[-1]
    chosen = q[np.arange(batch), actions]
    loss = float(np.mean((chosen - targets) ** 2))

    delta = np.zeros_like(q)
    delta[np.arange(batch), actions] = 2.0 * (chosen - targets) / batch

    grad_w = [np.zeros_like(w) for w in net.weights]
    grad_b = [np.zeros_like(b) for b in net.biases]
    for i in range(last, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (pre_acts[i - 1] > 0.0)
    return loss, grad_w, grad_b


@dataclass
class ReplayBuffer:
    """FIFO ring buffer of (state, action, reward, next state, terminal)."""

    capacity: int = 50_000
    _states: list = field(default_factory=list, repr=False)
    _actions: list = field(default_factory=list, repr=False)
    _rewards: list = field(default_factory=list, repr=False)
    _next_states: list = field(default_factory=list, repr=False)
    _terminals: list = field(default_factory=list, repr=False)
    _cursor: int = 0

    def __len__(self) -> int:
        return len(self._states)

    def push(self, state, action: int, reward: float, next_state, terminal: bool):
        if len(self._states) < self.capacity:
            self._states.append(state)
            self._actions.append(action)
            self._rewards.append(reward)
            self._next_states.append(next_state)
            self._terminals.append(terminal)
        else:
            i = self._cursor
            self._states[i] = state
            self._actions[i] = action
            self._rewards[i] = reward
            self._next_states[i] = next_state
            self._terminals[i] = terminal
        self._cursor = (self._cursor + 1) % self.capacity

    def sample(self, batch_size: int, rng: np.random.Generator):
        idx = rng.integers(0, len(self._states), size=batch_size)
        return (
            np.stack([self._states[i] for i in idx]),
            np.array([self._actions[i] for i in idx]),
            np.array([self._rewards[i] for i in idx]),
            np.stack([self._next_states[i] for i in idx]),
            np.array([self._terminals[i] for i in idx], dtype=float),
        )


@dataclass
class TrainingConfig:
    gamma: float = 0.95
    learning_rate: float = 1e-3
    batch_size: int = 32
    epsilon_start: float = 1.0
    epsilon_final: float = 0.05
    epsilon_decay_fraction: float = 0.2  # of total_steps
    target_sync_every: int = 1_000
    buffer_capacity: int = 50_000
    warmup_transitions: int = 1_000
    total_steps: int = 200_000
    eval_every: int = 20_000
    eval_episodes: int = 50
    eval_base_seed: int = 987_000_000
    checkpoint_every: int = 50_000
    layer_sizes: tuple[int, ...] = (STATE_DIM, 64, 64, len(AGENT_ACTIONS))

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if not 0.0 < self.epsilon_start <= 1.0:
            raise ValueError("epsilon must start in (0, 1]")

    def epsilon_at(self, step: int) -> float:
        horizon = max(1.0, self.epsilon_decay_fraction * self.total_steps)
        frac = min(1.0, step / horizon)
        return self.epsilon_start + (self.epsilon_final - self.epsilon_start) * frac


def train_step(net: QNetwork, target_net: QNetwork, batch, cfg: TrainingConfig) -> float:
    """One SGD step on the squared TD error; the online net is updated in
    place and the batch loss returned."""
    states, actions, rewards, next_states, terminals = batch
    next_q = q_forward(target_net, next_states)
    targets = rewards + cfg.gamma * (1.0 - terminals) * next_q.max(axis=1)
    loss, grad_w, grad_b = td_gradients(net, states, actions, targets)
    for w, gw in zip(net.weights, grad_w):
        w -= cfg.learning_rate * gw
    for b, gb in zip(net.biases, grad_b):
        b -= cfg.learning_rate * gb
    return loss


def learned_decide(net: QNetwork, session: Session) -> PolicyDecision:
    """Greedy action from the Q-values; ties go to the lowest action index."""
    q = q_forward(net, encode_state(session))
    return PolicyDecision(AGENT_ACTIONS[int(np.argmax(q))])


class LearnedPolicy:
    name = "learned"

    def __init__(self, net: QNetwork):
        self.net = net

    def decide(self, session: Session) -> PolicyDecision:
        return learned_decide(self.net, session)


class EpsilonGreedyPolicy:
    """Training-time wrapper; kept separate so inference stays greedy."""

    name = "epsilon-greedy"

    def __init__(self, net: QNetwork, epsilon: float, rng: np.random.Generator):
        self.net = net
        self.epsilon = epsilon
        self.rng = rng

    def decide(self, session: Session) -> PolicyDecision:
        if self.rng.random() < self.epsilon:
            return PolicyDecision(AGENT_ACTIONS[int(self.rng.integers(0, len(AGENT_ACTIONS)))])
        q = q_forward(self.net, encode_state(session))
        return PolicyDecision(AGENT_ACTIONS[int(np.argmax(q))])


def save_checkpoint(path, net: QNetwork, step: int, cfg: TrainingConfig, rng_state: dict | None = None):
    payload = {
        "format_version": CHECKPOINT_FORMAT,
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
        "step": step,
        "rng_state": rng_state,
        "config": asdict(cfg),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f)


def load_checkpoint(path) -> tuple[QNetwork, dict]:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    if payload.get("format_version") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format {payload.get('format_version')!r}")
    net = QNetwork(
        layer_sizes=tuple(payload["layer_sizes"]),
        weights=[np.array(w) for w in payload["weights"]],
        biases=[np.array(b) for b in payload["biases"]],
    )
    return net, payload


@dataclass
class TrainingResult:
    net: QNetwork
    curve: list[dict]
    checkpoint_paths: list[str]
    steps_run: int


def _episode_seed(seed: int, episode: int) -> int:
    return (seed * 1_000_003 + 17 + episode) % (2**62)


def train_policy(
    dataset: ApiDataset,
    simulator_params: SimulatorParams | None = None,
    cfg: TrainingConfig | None = None,
    seed: int = 0,
    out_dir=None,
    session_config: SessionConfig | None = None,
    reward_config: RewardConfig | None = None,
    progress=None,
) -> TrainingResult:
    """Replay-buffer Q-learning against the simulator.

    One environment step = one system decision. Training rewards use the
    shaped signal; the periodic greedy evaluations on held-out seeds report
    the core reward, which is what the learning curve records.
    """
    from apidialog.harness import mean_core_rewards, run_evaluation, success_rates

    cfg = cfg or TrainingConfig()
    simulator_params = simulator_params or SimulatorParams()
    session_config = session_config or SessionConfig()
    reward_config = reward_config or RewardConfig()

    init_rng = np.random.default_rng(seed)
    explore_rng = np.random.default_rng(seed + 1)
    sample_rng = np.random.default_rng(seed + 2)

    net = init_network(cfg.layer_sizes, init_rng)
    target_net = net.copy()
    buffer = ReplayBuffer(cfg.buffer_capacity)

    curve: list[dict] = []
    checkpoint_paths: list[str] = []
    n_components = len(dataset)

    def checkpoint(step: int):
        if out_dir is None:
            return
        path = os.path.join(out_dir, f"checkpoint_{step:09d}.json")
        save_checkpoint(path, net, step, cfg, rng_state=explore_rng.bit_generator.state)
        checkpoint_paths.append(path)

    def evaluate(step: int):
        matrix = run_evaluation(
            dataset,
            [LearnedPolicy(net)],
            n=cfg.eval_episodes,
            base_seed=cfg.eval_base_seed,
            simulator_params=simulator_params,
            config=session_config,
        )
        record = {
            "step": step,
            "mean_core_reward": mean_core_rewards(matrix)[0],
            "success_rate": success_rates(matrix)[0],
        }
        curve.append(record)
        if progress is not None:
            progress(record)

    checkpoint(0)
    step = 0
    episode = 0
    while step < cfg.total_steps:
        ep_seed = _episode_seed(seed, episode)
        episode += 1
        session = new_session(dataset, policy=None, config=session_config, seed=ep_seed)
        user = SimulatedUser(dataset, seed=ep_seed, params=simulator_params)
        user_act = user.select_act(session.state.last_system_act_type)
        apply_user_act(session, user_act)

        while step < cfg.total_steps:
            encoding = encode_state(session)
            rank_before = session.state.results.rank_of(user.target_id)
            preceding_user_act = session.state.last_user_act_type

            if explore_rng.random() < cfg.epsilon_at(step):
                action = int(explore_rng.integers(0, len(AGENT_ACTIONS)))
            else:
                action = int(np.argmax(q_forward(net, encoding)))

            system_act = system_respond(session, forced_act_type=AGENT_ACTIONS[action])
            system_entry = session.transcript[-1]
            user.observe_system_act(system_act)
            success = user.done
            terminal = success or session.terminal

            if terminal:
                user_was_unsure = False
                next_encoding = encoding
                rank_after = session.state.results.rank_of(user.target_id)
            else:
                next_user_act = user.select_act(session.state.last_system_act_type)
                apply_user_act(session, next_user_act)
                user_was_unsure = next_user_act.act_type is DialogueActType.UNSURE
                rank_after = session.state.results.rank_of(user.target_id)
                next_encoding = encode_state(session)

            reward = training_reward(
                TurnContext(
                    system_act_type=system_act.act_type,
                    preceding_user_act_type=preceding_user_act,
                    target_rank_before=rank_before,
                    target_rank_after=rank_after,
                    success=success,
                    user_was_unsure=user_was_unsure,
                ),
                reward_config,
                dataset_size=n_components,
            )
            system_entry.reward_training = reward
            buffer.push(encoding, action, reward, next_encoding, terminal)
            step += 1

            if len(buffer) >= cfg.warmup_transitions:
                train_step(net, target_net, buffer.sample(cfg.batch_size, sample_rng), cfg)
            if step % cfg.target_sync_every == 0:
                target_net = net.copy()
            if cfg.eval_every and step % cfg.eval_every == 0:
                evaluate(step)
            if cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
                checkpoint(step)

            if terminal:
                break

    if cfg.total_steps == 0 or not curve or curve[-1]["step"] != step:
        if cfg.total_steps > 0:
            evaluate(step)
    if not checkpoint_paths or not checkpoint_paths[-1].endswith(f"{step:09d}.json"):
        checkpoint(step)

    return TrainingResult(net=net, curve=curve, checkpoint_paths=checkpoint_paths, steps_run=step)


def write_curve_csv(path, curve: list[dict]):
    with open(path, "w", encoding="utf-8") as f:
        f.write("step,mean_core_reward,success_rate\n")
        for rec in curve:
            f.write(f"{rec['step']},{rec['mean_core_reward']},{rec['success_rate']}\n")
