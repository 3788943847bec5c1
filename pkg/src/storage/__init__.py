"""
Storage package: protocol documents and report files.
"""
