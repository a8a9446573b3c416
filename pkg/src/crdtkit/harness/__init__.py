"""Simulation, fuzzing, benchmarking, and relay harness."""
