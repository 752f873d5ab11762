"""
This module includes the matrix-free state-vector backend: circuit nodes (ActionNode),
their application to amplitude arrays and the projection on zero ancillas
"""

__author__ = "qpde-design developers"
__credits__ = ["qpde-design developers"]
__license__ = "MIT"
__version__ = "0.1"
__maintainer__ = "qpde-design developers"

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from qpde_design.core_linalg import StateVector, as_matrix, check_cap
from qpde_design.exceptions import (
    RegisterSliceMismatch,
    AmplitudeVanished,
    InvalidMatrix,
)
from qpde_design.units import limits


NODE_KINDS = (
    "phase_diag",
    "cyclic_shift",
    "permutation",
    "unitary",
    "prepare",
    "controlled",
    "select",
    "compose",
    "adjoint",
    "reflection",
)


class ActionNode:
    """
    A unitary circuit node acting on qubit indices of a flat register.
    Qubit 0 is the most significant bit of the amplitude index; targets are listed
    most significant first.

    ...

    Attributes
    ----------
    kind : str
        one of NODE_KINDS
    targets : tuple of int
        qubits the node payload acts on
    payload : numpy.ndarray or int or None
        angles (phase_diag), shift (cyclic_shift), image table (permutation),
        matrix (unitary, prepare), mask (reflection)
    children : tuple of ActionNode
        sub-circuits (controlled, select, compose, adjoint)
    controls : tuple of int
        control qubits (controlled) or flag qubit (reflection)
    values : tuple of int
        control values (controlled)
    label : str
        optional name

    Methods
    -------
    qubits()
        set of touched qubits
    remap(mapping)
        the same circuit on relabelled qubits
    """

    def __init__(
        self,
        kind: str,
        targets=(),
        payload=None,
        children=(),
        controls=(),
        values=(),
        label: str = None,
    ):
        if kind not in NODE_KINDS:
            raise ValueError(f"ActionNode, unknown kind: {kind}")
        self.kind = kind
        self.targets = tuple(int(q) for q in targets)
        self.payload = payload
        self.children = tuple(children)
        self.controls = tuple(int(q) for q in controls)
        self.values = tuple(int(v) for v in values)
        self.label = label
        if len(set(self.targets)) != len(self.targets):
            raise RegisterSliceMismatch(f"ActionNode {kind}, repeated targets {self.targets}")
        if set(self.targets) & set(self.controls):
            raise RegisterSliceMismatch(
                f"ActionNode {kind}, targets {self.targets} overlap controls {self.controls}"
            )

    def qubits(self) -> set:
        touched = set(self.targets) | set(self.controls)
        for child in self.children:
            touched |= child.qubits()
        return touched

    def remap(self, mapping):
        """
        Relabel qubits. mapping is a dict or a sequence indexed by the old qubit
        """
        return ActionNode(
            self.kind,
            targets=[mapping[q] for q in self.targets],
            payload=self.payload,
            children=[c.remap(mapping) for c in self.children],
            controls=[mapping[q] for q in self.controls],
            values=self.values,
            label=self.label,
        )

    def __repr__(self):
        return f"ActionNode({self.kind}, targets={self.targets}, children={len(self.children)})"


# %% Node factories


def phase_diag(targets, angles, label=None) -> ActionNode:
    angles = np.asarray(angles, dtype=float).reshape(-1)
    if angles.size != 2 ** len(targets):
        raise RegisterSliceMismatch(
            f"phase_diag: {angles.size} angles for {len(targets)} target qubits"
        )
    return ActionNode("phase_diag", targets, angles, label=label)


def global_phase(angle: float) -> ActionNode:
    return phase_diag((), [angle], label="global_phase")


def cyclic_shift(targets, shift: int, label=None) -> ActionNode:
    return ActionNode("cyclic_shift", targets, int(shift), label=label)


def flip(qubit: int) -> ActionNode:
    # X gate
    return cyclic_shift((qubit,), 1, label="X")


def permutation(targets, image, label=None) -> ActionNode:
    image = np.asarray(image, dtype=np.int64).reshape(-1)
    if image.size != 2 ** len(targets) or not np.array_equal(
        np.sort(image), np.arange(image.size)
    ):
        raise InvalidMatrix(f"permutation: image table is not a bijection on {len(targets)} qubits")
    return ActionNode("permutation", targets, image, label=label)


def unitary(targets, matrix, label=None, kind="unitary") -> ActionNode:
    matrix = as_matrix(matrix)
    if matrix.shape != (2 ** len(targets), 2 ** len(targets)):
        raise RegisterSliceMismatch(
            f"{kind}: matrix {matrix.shape} does not fit {len(targets)} target qubits"
        )
    return ActionNode(kind, targets, matrix, label=label)


def prepare(targets, matrix, label=None) -> ActionNode:
    return unitary(targets, matrix, label=label, kind="prepare")


def controlled(controls, values, child: ActionNode, label=None) -> ActionNode:
    controls = tuple(controls)
    if values is None:
        values = (1,) * len(controls)
    if len(values) != len(controls):
        raise RegisterSliceMismatch("controlled: one value per control qubit is needed")
    if set(controls) & child.qubits():
        raise RegisterSliceMismatch(f"controlled: controls {controls} are touched by the child")
    return ActionNode("controlled", children=[child], controls=controls, values=values, label=label)


def select(selector, children, label=None) -> ActionNode:
    selector = tuple(selector)
    if len(children) > 2 ** len(selector):
        raise RegisterSliceMismatch(
            f"select: {len(children)} children for a {len(selector)}-qubit selector"
        )
    for child in children:
        if set(selector) & child.qubits():
            raise RegisterSliceMismatch("select: selector qubits are touched by a child")
    return ActionNode("select", selector, children=children, label=label)


def compose(children, label=None) -> ActionNode:
    return ActionNode("compose", children=children, label=label)


def adjoint(child: ActionNode, label=None) -> ActionNode:
    if child.kind == "adjoint":
        return child.children[0]
    return ActionNode("adjoint", children=[child], label=label)


def reflection(targets, mask=None, flag: int = None, label=None) -> ActionNode:
    """
    2 Pi - I, Pi the projector on the target values where mask is True (default: all zeros).
    With a flag qubit the phase is +1 iff flag XOR mask
    """
    size = 2 ** len(targets)
    if mask is None:
        mask = np.zeros(size, dtype=bool)
        mask[0] = True
    mask = np.asarray(mask, dtype=bool).reshape(-1)
    if mask.size != size:
        raise RegisterSliceMismatch(f"reflection: mask of {mask.size} for {len(targets)} qubits")
    controls = () if flag is None else (flag,)
    return ActionNode("reflection", targets, mask, controls=controls, label=label)


# %% Application


def basis_indices(num_qubits: int) -> np.ndarray:
    return np.arange(2**num_qubits, dtype=np.int64)


def register_values(qubits, num_qubits: int) -> np.ndarray:
    """
    Integer value of a register (qubits most significant first) for every basis index
    """
    idx = basis_indices(num_qubits)
    out = np.zeros(idx.size, dtype=np.int64)
    for q in qubits:
        out = (out << 1) | ((idx >> (num_qubits - 1 - q)) & 1)
    return out


def _on_targets(psi, targets, num_qubits, fn):
    # bring targets to the front, act on a (2^k, rest) view, restore the order
    batch = psi.shape[1]
    k = len(targets)
    order = list(targets) + [q for q in range(num_qubits) if q not in targets] + [num_qubits]
    view = np.transpose(psi.reshape((2,) * num_qubits + (batch,)), order).reshape(2**k, -1)
    view = fn(view)
    view = view.reshape((2,) * num_qubits + (batch,))
    return np.ascontiguousarray(np.transpose(view, np.argsort(order))).reshape(
        2**num_qubits, batch
    )


def _apply(node: ActionNode, psi: np.ndarray, num_qubits: int, inverse: bool) -> np.ndarray:
    kind = node.kind
    if kind == "compose":
        children = reversed(node.children) if inverse else node.children
        for child in children:
            psi = _apply(child, psi, num_qubits, inverse)
        return psi
    if kind == "adjoint":
        return _apply(node.children[0], psi, num_qubits, not inverse)
    if kind == "phase_diag":
        phases = np.exp((-1j if inverse else 1j) * node.payload)
        return _on_targets(psi, node.targets, num_qubits, lambda v: v * phases[:, None])
    if kind == "reflection":
        signs = np.where(node.payload, 1.0, -1.0)
        if node.controls:
            flag = register_values(node.controls, num_qubits)
            values = register_values(node.targets, num_qubits)
            hit = np.logical_xor(node.payload[values], flag.astype(bool))
            return psi * np.where(hit, 1.0, -1.0)[:, None]
        return _on_targets(psi, node.targets, num_qubits, lambda v: v * signs[:, None])
    if kind == "cyclic_shift":
        shift = -node.payload if inverse else node.payload
        return _on_targets(psi, node.targets, num_qubits, lambda v: np.roll(v, shift, axis=0))
    if kind == "permutation":
        image = node.payload

        def permute(v):
            out = np.empty_like(v)
            if inverse:
                out[:] = v[image]
            else:
                out[image] = v
            return out

        return _on_targets(psi, node.targets, num_qubits, permute)
    if kind in ("unitary", "prepare"):
        matrix = node.payload.conj().T if inverse else node.payload
        return _on_targets(psi, node.targets, num_qubits, lambda v: matrix @ v)
    if kind == "controlled":
        mask = register_values(node.controls, num_qubits) == int(
            "".join(str(v) for v in node.values), 2
        )
        out = psi.copy()
        if np.any(mask):
            out[mask] = _apply(node.children[0], psi, num_qubits, inverse)[mask]
        return out
    if kind == "select":
        values = register_values(node.targets, num_qubits)
        out = psi.copy()
        for j, child in enumerate(node.children):
            mask = values == j
            if np.any(mask):
                out[mask] = _apply(child, psi, num_qubits, inverse)[mask]
        return out
    raise ValueError(f"Unknown node kind {kind}")


def apply_array(
    node: ActionNode, psi, num_qubits: int, inverse: bool = False, workers: int = None
) -> np.ndarray:
    """
    Apply a node (or its inverse) to an amplitude array of shape (2^N,) or (2^N, B).
    With workers > 1 the columns are split into chunks processed in a thread pool;
    the result does not depend on the partitioning.

    Parameters
    ----------
    node : ActionNode
        circuit
    psi : array-like
        amplitudes, one state per column
    num_qubits : int
        N
    inverse : bool
        apply the inverse circuit
    workers : int
        number of threads

    Returns
    -------
    numpy.ndarray
        output amplitudes with the input shape
    """
    psi = np.asarray(psi, dtype=complex)
    vector = psi.ndim == 1
    psi = psi.reshape(2**num_qubits, -1)
    if node.qubits() and max(node.qubits()) >= num_qubits:
        raise RegisterSliceMismatch(
            f"Node touches qubit {max(node.qubits())} on a {num_qubits}-qubit register"
        )
    if workers is not None and workers > 1 and psi.shape[1] > 1:
        chunks = np.array_split(np.arange(psi.shape[1]), min(workers, psi.shape[1]))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(
                pool.map(lambda c: _apply(node, psi[:, c], num_qubits, inverse), chunks)
            )
        out = np.concatenate(parts, axis=1)
    else:
        out = _apply(node, psi, num_qubits, inverse)
    return out.reshape(-1) if vector else out


def node_matrix(node: ActionNode, num_qubits: int, cap: int = None) -> np.ndarray:
    """
    Dense unitary of a node on num_qubits qubits
    """
    check_cap(2**num_qubits, cap)
    return apply_array(node, np.eye(2**num_qubits, dtype=complex), num_qubits)


def apply(node: ActionNode, psi: StateVector, inverse: bool = False) -> StateVector:
    """
    Apply a circuit node to a state vector

    Raises
    ------
    RegisterSliceMismatch
        if the node touches qubits outside the state layout
    """
    out = apply_array(node, psi.amplitudes, psi.num_qubits, inverse=inverse)
    return StateVector(out, psi.layout, normalized=False)


def project_zero_ancilla(psi: StateVector, ancilla, floor: float = None):
    """
    Project the ancilla qubits on |0...0> and renormalize

    Parameters
    ----------
    psi : StateVector
        state
    ancilla : str, list of str or tuple of int
        register labels or qubit indices to project
    floor : float
        minimum accepted probability, default from units.limits

    Returns
    -------
    (StateVector, float)
        the renormalized state on the remaining registers and the squared projected norm

    Raises
    ------
    AmplitudeVanished
        if the probability is below the floor
    """
    floor = limits["success_floor"] if floor is None else floor
    if isinstance(ancilla, str):
        ancilla = [ancilla]
    labels = [a for a in ancilla if isinstance(a, str)]
    qubits = set(int(a) for a in ancilla if not isinstance(a, str))
    for label in labels:
        qubits |= set(psi.register_qubits(label))
    if any(q < 0 or q >= psi.num_qubits for q in qubits):
        raise RegisterSliceMismatch(f"Ancilla qubits {sorted(qubits)} outside the layout")
    keep = [q for q in range(psi.num_qubits) if q not in qubits]
    order = sorted(qubits) + keep
    amps = np.transpose(psi.amplitudes.reshape((2,) * psi.num_qubits), order)
    projected = amps.reshape(2 ** len(qubits), -1)[0].copy()
    prob = float(np.real(np.vdot(projected, projected)))
    if prob < floor:
        raise AmplitudeVanished(f"Projection probability {prob} below the floor {floor}")
    layout = []
    start = 0
    for label, width in psi.layout:
        span = set(range(start, start + width))
        start += width
        if span <= qubits:
            continue
        if span & qubits:
            # partially projected register, fall back to an anonymous layout
            layout = None
            break
        layout.append((label, width))
    state = StateVector(projected / np.sqrt(prob), layout)
    if prob < 1e3 * floor:
        logging.warning(f"project_zero_ancilla: success probability {prob} close to the floor")
    return state, prob
