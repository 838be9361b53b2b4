"""Grid and circle classification, components and image output."""
