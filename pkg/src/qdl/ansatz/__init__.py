"""Circuit builders: QCNN variants, HEA, HVA, Z2 Trotter evolution and the shower circuit."""

from .hva import HvaSpec, hva_circuit, reference_bits
from .qcnn import (
    HeaSpec,
    QcnnSpec,
    conv_block,
    conv_gates,
    hea_circuit,
    pool_block,
    pool_gates,
    qcnn_circuit,
)
from .qps import (
    QpsConfig,
    qps_circuit,
    qps_emission_gate,
    qps_emission_scales,
    qps_flavor_rotation,
    qps_scale_grid,
    qps_state,
    qps_sudakov,
)
from .z2 import kinetic_block, z2_initial_circuit, z2_initial_state, z2_trotter_circuit

__all__ = [
    "HeaSpec", "HvaSpec", "QcnnSpec", "QpsConfig",
    "conv_block", "conv_gates", "hea_circuit", "hva_circuit", "kinetic_block",
    "pool_block", "pool_gates", "qcnn_circuit", "qps_circuit", "qps_emission_gate",
    "qps_emission_scales", "qps_flavor_rotation", "qps_scale_grid", "qps_state", "qps_sudakov",
    "reference_bits", "z2_initial_circuit", "z2_initial_state", "z2_trotter_circuit",
]
