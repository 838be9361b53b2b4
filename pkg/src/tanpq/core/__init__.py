"""Family kernel, orbit engine and virtual centers."""
