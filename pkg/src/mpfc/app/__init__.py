"""Configuration, initial data, experiment drivers and the command line."""
