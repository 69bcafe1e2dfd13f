"""Voxel-wise tumor growth prediction: python surface of the C++ core."""

try:
    from ._tumorcast import (  # installed wheel layout
        __version__,
        build_growth_map,
        compute_icvf,
        compute_metrics,
        generate_phantom,
        gradient_check,
        linear_predict,
        map_suv,
    )
except ImportError:  # in-tree build: extension sits on PYTHONPATH
    from _tumorcast import (
        __version__,
        build_growth_map,
        compute_icvf,
        compute_metrics,
        generate_phantom,
        gradient_check,
        linear_predict,
        map_suv,
    )

__all__ = [
    "__version__",
    "build_growth_map",
    "compute_icvf",
    "compute_metrics",
    "generate_phantom",
    "gradient_check",
    "linear_predict",
    "map_suv",
]
