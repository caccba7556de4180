"""Van der Waals forces between excited atoms in free space and near dilute bodies."""

from .atomic import (AtomicSpecies, PopulationState, PoleProximityError, SpeciesError,
                     evolve_populations, free_space_decay_rate, ground_state,
                     load_species, polarizability, two_level)
from .green import (FREE_SPACE, DiluteBody, FreeSpace, GreenSample, born_scattering_green,
                    free_space_green, green, lattice_body)
from .force import (ForceBreakdown, QuadratureSpec, closed_form_resonant_free_space,
                    nonresonant_force, nonretarded_force, resonant_force, total_force)
from .casimir_polder import pairwise_cp_sum, single_atom_cp_resonant

__version__ = "0.1.0"

__all__ = [
    "AtomicSpecies", "PopulationState", "PoleProximityError", "SpeciesError",
    "evolve_populations", "free_space_decay_rate", "ground_state", "load_species",
    "polarizability", "two_level",
    "FREE_SPACE", "DiluteBody", "FreeSpace", "GreenSample", "born_scattering_green",
    "free_space_green", "green", "lattice_body",
    "ForceBreakdown", "QuadratureSpec", "closed_form_resonant_free_space",
    "nonresonant_force", "nonretarded_force", "resonant_force", "total_force",
    "pairwise_cp_sum", "single_atom_cp_resonant",
]
