"""DMRG and Clifford-augmented DMRG for small ab initio Hamiltonians."""
from .camps import reconstruct_state, run_cadmrg
from .clifford import CliffordCircuit, census, enumerate_gates
from .dmrg import RunConfig, run_dmrg
from .fci import fci_ground_energy
from .fcidump import bundled, read_fcidump
from .mps import MPO, MPS, mpo_canonicalize, mpo_from_pauli_sum
from .pauli import PauliSum, qubit_hamiltonian

__version__ = "0.1.0"


def molecular_mpo(name_or_path, rel_threshold=1e-10):
    """Canonical MPO of a bundled molecule name or an FCIDUMP path."""
    from pathlib import Path
    p = Path(name_or_path)
    t = read_fcidump(p if p.exists() else bundled(str(name_or_path)))
    return mpo_canonicalize(mpo_from_pauli_sum(qubit_hamiltonian(t)), rel_threshold)
