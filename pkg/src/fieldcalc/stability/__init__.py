from .oracle import dijkstra, path_weight_oracle  # noqa: F401
from .fragment import FragmentReport, RepVerdict, check_fragment  # noqa: F401
from .properties import (PropertyAnnotation, ValidationResult,  # noqa: F401
                         parse_registry_text, validate_property)
from .empirical import (StabilisationVerdict, empirical_selfstab,  # noqa: F401
                        eventual_equivalence)
