"""Bicycle tracks: front and rear wheel geometry, monodromy, wave fronts and unicycle tracks."""

from .bikeflow import (
    AlphaPath,
    BikeConfig,
    ClosedRear,
    LorentzMatrix,
    Stability,
    closed_rear_tracks,
    forward_map,
    integrate_alpha,
    monodromy_2d,
    monodromy_nd,
    multiplier_check,
    rear_track,
)
from .errors import (
    CurveSpecError,
    LinkageError,
    MonodromyError,
    NumericalFailure,
    TrackError,
    UnderResolvedError,
    UnsupportedFrontError,
)
from .experiments import bisect_parabolic, menzin_trials, scale_sweep
from .finn import (
    Linkage,
    UnicycleTrack,
    backward_obstruction,
    count_extrema,
    count_zeros,
    iterate_track,
    jet_from_linkage,
    linkage_from_track,
    rolle_witness,
    simulate_linkage,
)
from .frontstats import WaveFront, area_bookkeeping, cusp_signs, rotation_relation_check, signed_area
from .geom import (
    BumpGraph,
    Circle,
    Ellipse,
    PolarOval,
    PolyGraph,
    Polyline,
    SampledCurve,
    Samples,
    SupportOval,
    TorusKnot,
    build_curve,
    finn_seed,
    rotation_number,
    rounded_square,
    shamrock,
)
from .mobius import MobiusKind, MobiusMap, classify, fixed_points

__version__ = "0.1.0"
