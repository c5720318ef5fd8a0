"""
RAG Temperature x Perturbation Benchmark Source Package
"""
