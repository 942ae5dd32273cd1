"""Spatial ranks of the scores and the concentration index over circular windows."""
import numpy as np

from sigfss.pca import fit_pca, select_k
from sigfss.ranks import fit_transform_matrix
from sigfss.scan import enumerate_windows, scan
from sigfss.signature import signature_matrix, truncation_for_budget
from sigfss.simulation import SimConfig, default_geometry, generate_dataset

geometry, cluster = default_geometry()
print("planted sites:", cluster)
samples = generate_dataset(SimConfig(cluster_sites=cluster, alpha=1.0, replicate_seed=3), geometry)
pca = fit_pca(signature_matrix(samples, truncation_for_budget(1).order))
scores = pca.with_k(select_k(pca)).scores

rs = fit_transform_matrix(scores)
print(f"K={scores.shape[1]}  iterations={rs.iterations}  residual={rs.condition_residual:.1e}")
# second moment of the ranks is now a multiple of the identity
print(np.round(rs.ranks.T @ rs.ranks / len(rs.ranks), 4))

windows = enumerate_windows(geometry)
print(len(windows), "windows, largest has", max(w.size for w in windows), "sites")
res = scan(rs.ranks, windows)
print(f"lambda = {res.statistic:.3f}")
for w, idx in zip(res.windows[:5], res.indices[:5]):
    print(f"  {idx:8.3f}  {w.members}")
