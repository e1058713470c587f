"""Reference solar azimuths computed with the NREL Solar Position Algorithm.

Values were produced once by an independent SPA implementation and frozen
here; they are not derived from this package's solar code.
Each entry is ``(latitude, longitude, UTC timestamp, azimuth in degrees)``.
"""

SPA_AZIMUTHS = [
    (52.45, 13.30, "2016-08-01T10:00:00Z", 150.6066),
    (52.45, 13.30, "2016-08-01T15:30:00Z", 260.6001),
    (0.0, 0.0, "2020-03-20T06:10:00Z", 89.9615),
    (40.0, -105.0, "2003-10-17T19:30:30Z", 194.5117),
    (-33.87, 151.21, "2010-12-21T02:00:00Z", 351.1765),
    (35.68, 139.69, "1999-06-21T23:30:00Z", 92.7777),
    (64.13, -21.9, "2021-06-21T12:00:00Z", 149.3845),
    (-1.29, 36.82, "2030-09-10T09:00:00Z", 50.3428),
    (48.85, 2.35, "1975-01-15T11:00:00Z", 165.2723),
    (19.43, -99.13, "2045-04-02T17:45:00Z", 134.8441),
]

# Local solar noon in Berlin (52.45 N, 13.30 E) on 2016-08-01, from the same source.
BERLIN_NOON_UTC = "2016-08-01T11:13:06.700Z"
