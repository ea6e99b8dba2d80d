"""
storage/__init__.py

Storage package: shape files, OFF meshes, the Schur cache and run outputs.
"""
