"""Spread-spectrum wavelet watermarking toolkit"""
