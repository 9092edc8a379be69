"""Hand-labelled work-status cases shared by unit and acceptance tests.

Each row is (intent, expected status, expected rule).
"""

from __future__ import annotations

W, NW = "WORKING", "NOT WORKING"

INTENT_CASES = [
    # stoppages
    ("Join the illegal strike at the main gate.", NW, "rule1"),
    ("Organize a legal protest outside the office against the wage cut.", NW, "rule1"),
    ("Block the factory gates with the other laborers.", NW, "rule1"),
    ("Walk out of the plant together with Laborer-3.", NW, "rule1"),
    ("Stand on the picket line all day.", NW, "rule1"),
    ("Distribute flyers for the strike happening right now.", NW, "rule1"),
    ("Stay home today to demand safer machines.", NW, "rule1"),
    ("Stage a sit-in in the manager's office.", NW, "rule1"),
    ("Refuse to work until the old wage is restored.", NW, "rule1"),
    ("Coordinate a walkout of the whole assembly line.", NW, "rule1"),
    # sabotage, quitting
    ("Sabotage the conveyor belt so production halts.", NW, "rule2"),
    ("Quit my job and look for work elsewhere.", NW, "rule2"),
    ("Damage the packing machines during the night shift.", NW, "rule2"),
    ("Resign from the company effective immediately.", NW, "rule2"),
    # contradictions
    ("Work the full shift and block the factory gates all day.", NW, "contradiction"),
    ("Continue normal work while joining the strike outside.", NW, "contradiction"),
    ("Keep working on the line and also sabotage the press.", NW, "contradiction"),
    ("Perform my regular duties and picket the entrance at the same time.", NW, "contradiction"),
    # litigation and other ancillary acts
    ("Sue the company for unpaid overtime.", W, "rule3"),
    ("File a lawsuit against Northfield Works over the safety cuts.", W, "rule3"),
    ("File a collective petition about the safety budget.", W, "rule3"),
    ("Attend a union meeting after hours.", W, "rule3"),
    ("Discuss legal options with colleagues during lunch.", W, "rule3"),
    ("Talk about the possibility of a future strike while finishing my tasks.", W, "rule3"),
    ("Negotiate with management about the overtime rate.", W, "rule3"),
    ("Sue the company to protest the wage cut.", W, "rule3"),
    # plain work
    ("Continue normal work at my post.", W, "default"),
    ("Work overtime to finish the weekly order.", W, "default"),
    ("Focus on my production tasks and save money.", W, "default"),
    ("Strike a deal with my supervisor to swap shifts next week.", W, "default"),
]
