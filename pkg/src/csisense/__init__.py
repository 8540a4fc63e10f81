"""Device-free WiFi sensing: Fresnel-zone planning, CSI ingest and simulation,
preprocessing, statistical features and kNN / naive Bayes evaluation."""

__version__ = "0.1.0"
