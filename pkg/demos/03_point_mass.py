"""Train a small RAC-SAC agent on the point mass and compare it with the
scripted PD controller.

The agent learns one policy per punishment weight beta (beta is an input to
both the actor and the critics). After training, the script evaluates the
policy on a grid of beta values; the protocol score is the best of them.

    python demos/03_point_mass.py --steps 15000

The default 15k steps take a few minutes on one core; the learning curve is
printed every 1000 steps.
"""
import argparse

import numpy as np

from raclab.agents import AgentConfig, RacAgent
from raclab.envs import ContinuousToySpec, PointMass, scripted_controller
from raclab.evaluation import beta_grid, episode_returns, evaluate

parser = argparse.ArgumentParser()
parser.add_argument("--steps", type=int, default=15_000)
parser.add_argument("--seed", type=int, default=0)
args = parser.parse_args()

spec = ContinuousToySpec(action_scale=4.0)
env = PointMass(np.random.default_rng(args.seed), spec)
eval_env = PointMass(np.random.default_rng(0), spec)
cfg = AgentConfig(n_critics=5, utd=5, hidden=(32, 32), batch_size=128, capacity=100_000)
agent = RacAgent(cfg, env.obs_dim, env.act_dim, seed=args.seed)
betas = beta_grid(cfg.u2.right, cfg.eval_count)

oracle = episode_returns(lambda o, b=None: scripted_controller(spec, o), eval_env, [0.0], 20,
                         np.random.default_rng(1), spec.horizon).mean()
print(f"scripted controller return {oracle:.2f}")

obs = env.reset()
for t in range(1, args.steps + 1):
    action = agent.act(obs)
    step = env.step(action)
    agent.observe(obs, action, step.reward, step.obs, step.terminal)
    obs = env.reset() if step.done else step.obs
    if agent.ready:
        agent.train_step()
    if t % 1000 == 0:
        ev = evaluate(agent, eval_env, betas, 20, np.random.default_rng(1), spec.horizon)
        print(f"step {t:6d}: score {ev.score:8.2f} at beta* {ev.beta_star:.3f}")

ev = evaluate(agent, eval_env, betas, 20, np.random.default_rng(1), spec.horizon)
print("\nreturn per beta:", " ".join(f"{b:.3f}:{m:.2f}" for b, m in zip(betas, ev.means)))
print(f"best {ev.score:.2f} against the controller's {oracle:.2f}")
