"""Diagonalization, dressed-state labeling and spectroscopic observables."""
import csv
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .circuit import OperatorRep, assemble_static_hamiltonian
from .errors import AmbiguousLabeling, MissingLabels, NonHermitian

COMPUTATIONAL = ((0, 0, 0, 0), (0, 1, 0, 0), (1, 0, 0, 0), (1, 1, 0, 0))


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Lowest eigenpairs of a Hamiltonian.

    ``labels`` maps dressed index -> bare label (l_a, m_b, n_-, p_+);
    ``overlaps`` holds the corresponding squared overlaps.
    """
    energies: np.ndarray
    states: np.ndarray
    bare_labels: np.ndarray = None
    labels: dict = None
    overlaps: dict = None

    @property
    def n_levels(self):
        return self.energies.size

    def index_of(self, label):
        if self.labels is None:
            raise MissingLabels("eigensystem carries no labels")
        label = tuple(int(v) for v in label)
        for k, lab in self.labels.items():
            if lab == label:
                return k
        raise MissingLabels(f"no dressed state labeled {label}")

    def computational_indices(self):
        return np.array([self.index_of(lab) for lab in COMPUTATIONAL])


def diagonalize(H, n_levels=None, check=True):
    """Lowest ``n_levels`` eigenpairs of a Hermitian operator."""
    labels = None
    if isinstance(H, OperatorRep):
        labels = H.labels
        m = H.matrix
    else:
        m = np.asarray(H)
    if check:
        scale = max(np.linalg.norm(m), 1e-300)
        if np.linalg.norm(m - m.conj().T) > 1e-10 * scale:
            raise NonHermitian("matrix is not Hermitian")
    N = m.shape[0]
    n_levels = N if n_levels is None else min(int(n_levels), N)
    if n_levels == N:
        E, V = np.linalg.eigh(m)
    else:
        E, V = sla.eigh(m, subset_by_index=[0, n_levels - 1], driver="evr")
    if check:
        res = np.linalg.norm(m @ V - V * E, axis=0)
        if res.max() > 1e-8 * max(np.linalg.norm(m, 2) if N <= 64 else np.abs(E).max(), 1.0):
            raise NonHermitian(f"eigen-residual too large ({res.max():.2e})")
    return EigenSystem(E, V, labels)


def label_dressed(es, bare_labels=None, required=COMPUTATIONAL, threshold=0.5):
    """Assign each dressed state the bare label with the largest squared overlap.

    States whose best squared overlap does not exceed ``threshold`` stay
    unlabeled. Every label in ``required`` must be assigned exactly once,
    otherwise AmbiguousLabeling is raised. The sign of each dressed state is
    fixed so that its dominant bare amplitude is positive.
    """
    bl = es.bare_labels if bare_labels is None else np.asarray(bare_labels)
    if bl is None:
        raise MissingLabels("no bare labels available for labeling")
    V = es.states.copy()
    prob = np.abs(V) ** 2
    best = np.argmax(prob, axis=0)
    cols = np.arange(V.shape[1])
    phase = V[best, cols] / np.abs(V[best, cols])
    V = V / phase if np.iscomplexobj(V) else V * np.sign(V[best, cols])
    labels, overlaps = {}, {}
    for k in cols:
        if prob[best[k], k] > threshold:
            labels[int(k)] = tuple(int(v) for v in bl[best[k]])
            overlaps[int(k)] = float(prob[best[k], k])
    for lab in required:
        hits = [k for k, v in labels.items() if v == tuple(lab)]
        if len(hits) != 1:
            best_ov = 0.0
            idx = np.flatnonzero((bl == np.asarray(lab)).all(axis=1))
            if idx.size:
                best_ov = float(prob[idx[0]].max())
            raise AmbiguousLabeling(
                f"bare state {tuple(lab)} has no unique dressed partner "
                f"(best squared overlap {best_ov:.3f})")
    return replace(es, states=V, bare_labels=bl, labels=labels, overlaps=overlaps)


def computational_energies(es):
    """Dressed energies of |00>, |01>, |10>, |11> (qubit a first)."""
    return es.energies[es.computational_indices()]


def zz_strength(es):
    """zeta_ZZ = E_11 - E_10 - E_01 + E_00 from labeled dressed energies."""
    E00, E01, E10, E11 = computational_energies(es)
    return float(E11 - E10 - E01 + E00)


def full_eigensystem(params, flux, n_levels=8, disorder=None, **kw):
    """Assemble, diagonalize and label the full Hamiltonian at ``flux``."""
    H, basis = assemble_static_hamiltonian(params, flux, disorder, **kw)
    es = label_dressed(diagonalize(H, n_levels))
    return es, basis


def _mode_overlap(basis_1, basis_2):
    """<b1_i|b2_j> between two product bases differing only in coupler flux."""
    v1 = basis_1.modes[2].vectors
    v2 = basis_2.modes[2].vectors
    O = v1.T @ v2
    L1, L2 = basis_1.labels, basis_2.labels
    same = ((L1[:, None, 0] == L2[None, :, 0]) & (L1[:, None, 1] == L2[None, :, 1])
            & (L1[:, None, 3] == L2[None, :, 3]))
    return same * O[np.ix_(L1[:, 2], L2[:, 2])]


def spectrum_along_contour(params, contour, n_levels=8, disorder=None, track=True, **kw):
    """Dressed energies (relative to the ground state) along a flux contour.

    Labels are carried from point to point by eigenvector overlap (> 0.5);
    the bare-overlap labeling is used where tracking is inconclusive.

    Returns a dict with 'phi_c', 'energies' (rows ordered E_00, E_01, E_10,
    E_11 followed by the remaining levels in ascending order) and 'labels'.
    """
    rows, labs, phis = [], [], []
    prev = None
    for fp in contour:
        H, basis = assemble_static_hamiltonian(params, fp, disorder, **kw)
        es = label_dressed(diagonalize(H, n_levels))
        comp = list(es.computational_indices())
        if track and prev is not None:
            pes, pbasis, pcomp = prev
            S = np.abs(pes.states.T @ _mode_overlap(pbasis, basis) @ es.states) ** 2
            tracked = [int(np.argmax(S[k])) for k in pcomp]
            if all(S[k, j] > 0.5 for k, j in zip(pcomp, tracked)) and len(set(tracked)) == 4:
                comp = tracked
        rest = [k for k in range(es.n_levels) if k not in comp]
        E = es.energies - es.energies[0]
        rows.append(np.concatenate([E[comp], E[rest]]))
        labs.append([es.labels.get(k) for k in comp + rest])
        phis.append(fp.phi_c)
        prev = (es, basis, comp)
    return {"phi_c": np.array(phis), "energies": np.array(rows), "labels": labs}


def write_spectrum_csv(path, table):
    n = table["energies"].shape[1]
    header = ["phi_c_over_2pi", "E_00", "E_01", "E_10", "E_11"] + [f"E_level{k}" for k in range(4, n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for phi, row in zip(table["phi_c"], table["energies"]):
            w.writerow([f"{phi / (2 * np.pi):.10g}"] + [f"{v:.12g}" for v in row])
