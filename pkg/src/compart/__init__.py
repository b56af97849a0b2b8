"""Graph compartmentalization measures and a preference-based block model."""
