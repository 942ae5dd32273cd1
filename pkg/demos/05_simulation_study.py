"""A small power study. The full grid takes hours; this runs in a couple of minutes."""
from sigfss.simulation import default_geometry, run_study, study_grid

geometry, cluster = default_geometry()
configs = study_grid(dims=(1,), deltas=("delta1", "delta3"), alphas=(0.0, 0.5, 1.0), cluster_sites=cluster)
metrics = run_study(configs, geometry, replicates=20, permutations=99, seed=5)

print(f"{'delta':>7} {'alpha':>5} {'power':>5} {'tpr':>5} {'fpr':>5} {'ppv':>5}")
for cfg, m in zip(configs, metrics):
    print(f"{cfg.delta_kind:>7} {cfg.alpha:5.2f} {m.power:5.2f} {m.tpr:5.2f} {m.fpr:5.2f} {m.ppv:5.2f}")
