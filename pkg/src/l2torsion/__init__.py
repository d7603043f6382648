"""L2-torsion of finite Hilbert complexes and one-dimensional Morse systems."""
from .vn_core import (EquivariantOperator, GroupSpec, NotDeterminantClass, QuadratureError,
                      fk_det, kernel_dim, log_fk_det, novikov_shubin, spectral_density,
                      vn_trace)
from .hilbert_complex import (HilbertComplex, l2_betti, l2_torsion, log_l2_torsion,
                              tensor_product, torsion_compare, twist_metric, validate)

__version__ = "0.1.0"
