"""From signature coefficients to a handful of principal scores."""
import numpy as np

from sigfss.pca import fit_pca, select_k
from sigfss.signature import signature_matrix, truncation_for_budget
from sigfss.simulation import SimConfig, default_geometry, generate_dataset

geometry, cluster = default_geometry()
samples = generate_dataset(SimConfig(cluster_sites=cluster, alpha=1.0, replicate_seed=3), geometry)
order = truncation_for_budget(1).order
sigs = signature_matrix(samples, order)
print("signature matrix:", sigs.shape)

pca = fit_pca(sigs)
print("leading eigenvalues:", np.round(pca.eigenvalues[:6], 4))
print("cumulative inertia: ", np.round(pca.cumulative_inertia[:6], 4))

for rule in ("elbow", "threshold:0.95", "threshold:0.99"):
    print(f"{rule:>15}: K = {select_k(pca, rule)}")

# coefficients of different levels live on very different scales
std = fit_pca(sigs, standardize=True)
print("standardized, elbow K =", select_k(std, "elbow"))
