"""Package universes, installations, measures and linear programs."""
