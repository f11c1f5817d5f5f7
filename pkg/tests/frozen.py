"""Expected values produced by ``oracles.py`` (mpmath, 1024 bits) and frozen here.

a = 0.975, alpha = 2 unless noted.
"""

A = "0.975"

# critical orbit c_1 .. c_8
CRITICAL_ORBIT = (
    "0.975",
    "0.0950625",
    "0.335499922265625",
    "0.869464925258999871231079101562",
    "0.442633109113110391843062036302",
    "0.962165255336889637904763738856",
    "0.141972779361611655866291117453",
    "0.475084386199608086191953479931",
)

# closest-approach times of the critical orbit within 97 steps
Q_TRUSTED = (1, 2, 3, 5, 8, 29, 43, 93)
Q_PREFIX = (1, 2, 3, 5, 8)

P0 = "0.7435897435897435897435897435897435897436"
PSI_P0 = "0.391688867174862768260350463766838956921530595570959363931314"
CENTRAL_TIME_P0 = 3

# (n, q, x(n), depth, case, psi, central time, |V|/|U| - 1 over 2)
ANCHORS = (
    (3, 3, "2.56410256410256410256410256410256410256410256410256410256410256410256410256e-01",
     1, "HIGH", "0.391688867174862768260350463766838956921530595570959363931314", 3,
     "0.6244907944181819985858593633554003688285"),
    (4, 5, "4.16304918323040210443315803834881705243094074270124368887647709053125387699e-01",
     6, "LOW", "0.487425361793239619980200546068855136444947060223005466992574", 5,
     "2.82793199696050179788385678391754414212"),
    (5, 8, "4.75083379738371194483063796596265879350206768612297214208970568066856294268e-01",
     31, "HIGH", "0.492106046456417367341547194341032159708261805666316044013157", 8,
     "1.078209203035195330754814162274166316163"),
    (6, 29, "4.76480133535821401022039004166480213927135870658789214846286750377475811508e-01",
     31, "LOW", "0.499999669005561580539052459595669123271272667069283461525446", 29,
     "35528.59616319967028301128199329849446557"),
    (7, 43, "4.83378133309161135210476203445010720256363141234867483516425492778198141111e-01",
     27, "LOW", "0.499999999382482361501133982848981469014755949742734155988808", 43,
     "13458616.43217803402960448353714024995954"),
    (8, 93, "4.84438642355544827929092891328705877350895690968473955456262389446011316190e-01",
     28, "LOW", "0.499999999999981678349644431982662552941119504609324923380628", 93,
     "424671286222.5235144208947906810942441792"),
)
