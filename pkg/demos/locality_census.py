"""
Qubit support of H and G under Jordan-Wigner
============================================

Three spatial orbitals, one of them external.  The census counts Pauli
strings per sector by how wide their support is.
"""

from swrrst import build_G, hamiltonian_from_tensors, locality_report, solve_swrrst
from swrrst.models import toy_hamiltonian

tensors, part = toy_hamiltonian(n=3, k=1, ratio=0.1, seed=5)
H = hamiltonian_from_tensors(tensors)
B, report = solve_swrrst(H, part)
G = build_G(H, B, part).G


def show(label, op):
    rep = locality_report(op, part)
    print(f"\n{label}: {rep.violations} violations")
    for name, entry in rep.sectors.items():
        widths = ", ".join(f"w{w}:{c}" for w, c in entry["width_histogram"].items())
        print(f"  {name:34s} {entry['strings']:4d} strings  [{widths}]")
        for letters in rep.examples[name][:2]:
            print(f"      e.g. {letters}")


show("H", H)
show("G", G)

# External qubits are 4 and 5 here; in G they carry only Z, or flip as a pair
