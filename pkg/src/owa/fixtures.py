"""Deterministic synthetic inputs: a web-archive collection (WARC + CDX), a
news corpus, a tweet stream, a gazetteer, a small DBpedia-like knowledge base
and a 20-need evaluation suite.

Everything is derived from a seeded ``random.Random`` so repeated runs write
byte-identical files. Generators also return ground truth (intended entities,
duplicate counts, monthly tweet counts) for tests to check against.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Optional

from owa.archive_io import WarcWriter, format_timestamp, write_cdx
from owa.layer import stable_hex
from owa.rdf import n3
from owa.rdf.terms import (
    DBC, DBO, DBR, DCTERMS, NYT, RDF, RDFS, XSD_DATE, YAGO, IRI, Literal, Triple,
)

KB_SERVICE = "http://dbpedia.org/sparql"
WAYBACK_TEMPLATE = "https://wayback.archive-it.org/2950/{timestamp}/{original_url}"
GOLF_ARTICLE_ID = "9504E4D71530F932A35755C0A9619C8B63"

POLITICIAN = DBO + "Politician"
DRUG = DBO + "Drug"
JOURNALIST = YAGO + "Journalist110224578"
PERSON = DBO + "Person"


@dataclass(frozen=True)
class EntitySpec:
    local: str
    surfaces: tuple  # ((surface, prior), ...); the first one is the usual name
    keywords: tuple = ()
    types: tuple = ()
    subjects: tuple = ()
    birth_place: Optional[str] = None
    birth_date: Optional[str] = None
    abstract_fr: Optional[str] = None

    @property
    def uri(self) -> str:
        return DBR + self.local

    @property
    def name(self) -> str:
        return self.surfaces[0][0]


def _e(local: str, *aliases, kw: str = "", types=(), subjects=(), name: Optional[str] = None, prior: float = 0.9,
       **facts) -> EntitySpec:
    main = name or local.split("_(")[0].replace("_", " ")
    surfaces = ((main, prior),) + tuple(aliases)
    return EntitySpec(local, surfaces, tuple(k for k in kw.split(",") if k), tuple(types), tuple(subjects), **facts)


_POL = (POLITICIAN, PERSON)

ENTITIES: list[EntitySpec] = [
    # politicians
    _e("Barack_Obama", ("Obama", 0.9), kw="senator,campaign,president,illinois", types=_POL),
    _e("Hillary_Clinton", ("Clinton", 0.45), kw="senator,campaign,first lady", types=_POL),
    _e("Bill_Clinton", ("Clinton", 0.5), kw="president,arkansas,white house", types=_POL),
    _e("John_McCain", ("McCain", 0.9), kw="senator,arizona,campaign", types=_POL),
    _e("John_Edwards", kw="senator,campaign,north carolina", types=_POL),
    _e("Joe_Biden", ("Biden", 0.9), kw="senator,delaware,campaign", types=_POL),
    _e("Bill_Richardson", kw="governor,new mexico,campaign", types=_POL),
    _e("Dick_Cheney", ("Cheney", 0.9), kw="vice president,white house", types=_POL),
    _e("George_W._Bush", ("Bush", 0.4), kw="president,texas,white house", types=_POL),
    _e("George_H._W._Bush", ("Bush", 0.55), kw="president,white house,gulf", types=_POL, name="George Bush"),
    _e("Nelson_Mandela", ("Mandela", 0.9), kw="apartheid,prison,south africa", types=_POL),
    _e("Al_Gore", kw="vice president,climate,tennessee", types=_POL),
    _e("Michael_Bloomberg", ("Bloomberg", 0.6), kw="mayor,city hall", types=_POL),
    # New York lawyers
    _e("Rudy_Giuliani", ("Giuliani", 0.9), kw="prosecutor,mayor,court", types=_POL,
       subjects=("New_York_lawyers",), birth_place="Brooklyn", birth_date="1944-05-28",
       abstract_fr="Rudolph Giuliani est un homme politique et avocat américain."),
    _e("Alan_Dershowitz", ("Dershowitz", 0.9), kw="court,appeal,professor", types=(PERSON,),
       subjects=("New_York_lawyers",), birth_place="Brooklyn", birth_date="1938-09-01",
       abstract_fr="Alan Dershowitz est un avocat et professeur de droit américain."),
    _e("Ruth_Bader_Ginsburg", ("Ginsburg", 0.8), kw="court,judge,appeal", types=(PERSON,),
       subjects=("New_York_lawyers",), birth_place="Brooklyn", birth_date="1933-03-15"),
    _e("Chuck_Schumer", ("Schumer", 0.9), kw="congress,court,senator", types=_POL,
       subjects=("New_York_lawyers",), birth_place="Brooklyn", birth_date="1950-11-23",
       abstract_fr="Charles Schumer est un homme politique américain."),
    _e("Ed_Koch", ("Koch", 0.15), kw="mayor,city hall,court", types=_POL,
       subjects=("New_York_lawyers",), birth_place="The_Bronx", birth_date="1924-12-12",
       abstract_fr="Edward Koch est un homme politique américain."),
    _e("Mario_Cuomo", ("Cuomo", 0.9), kw="governor,albany,court", types=_POL,
       subjects=("New_York_lawyers",), birth_place="Queens", birth_date="1932-06-15"),
    # drugs
    _e("Cocaine", kw="police,drug,addiction,arrest", types=(DRUG,), subjects=("Stimulants",), name="cocaine"),
    _e("Heroin", kw="police,drug,addiction,overdose", types=(DRUG,), name="heroin"),
    _e("Aspirin", kw="heart,study,patients", types=(DRUG,), name="aspirin"),
    _e("Zidovudine", ("AZT", 0.9), kw="aids,patients,treatment", types=(DRUG,), name="zidovudine"),
    _e("Furosemide", kw="patients,treatment,heart", types=(DRUG,), name="furosemide"),
    _e("Nicotine", kw="smoking,tobacco,addiction", types=(DRUG,), subjects=("Stimulants",), name="nicotine"),
    _e("Fluoxetine", ("Prozac", 0.9), kw="depression,patients,treatment", types=(DRUG,), name="fluoxetine"),
    _e("Caffeine", kw="coffee,study,stimulant", types=(DRUG,), subjects=("Stimulants",), name="caffeine"),
    _e("Amphetamine", kw="stimulant,police,drug", types=(DRUG,), subjects=("Stimulants",), name="amphetamine"),
    # journalists
    _e("Ralph_Nader", ("Nader", 0.9), kw="consumer,activist,protest", types=(JOURNALIST, PERSON)),
    _e("Chris_Hedges", ("Hedges", 0.5), kw="war,reporter,protest", types=(JOURNALIST, PERSON)),
    _e("Dylan_Ratigan", ("Ratigan", 0.9), kw="television,banks,protest", types=(JOURNALIST, PERSON)),
    _e("Naomi_Klein", kw="author,protest,banks", types=(JOURNALIST, PERSON)),
    _e("Matt_Taibbi", ("Taibbi", 0.9), kw="banks,reporter,magazine", types=(JOURNALIST, PERSON)),
    _e("Walter_Cronkite", ("Cronkite", 0.9), kw="television,anchor,news", types=(JOURNALIST, PERSON)),
    _e("Bob_Woodward", ("Woodward", 0.7), kw="reporter,watergate,news", types=(JOURNALIST, PERSON)),
    # Lakers players
    _e("Kobe_Bryant", ("Kobe", 0.9), kw="basketball,lakers,nba", types=(PERSON,), subjects=("Los_Angeles_Lakers_players",)),
    _e("Magic_Johnson", ("Magic", 0.3), kw="basketball,lakers,nba", types=(PERSON,),
       subjects=("Los_Angeles_Lakers_players",)),
    _e("Kareem_Abdul-Jabbar", ("Kareem", 0.9), kw="basketball,lakers,nba", types=(PERSON,),
       subjects=("Los_Angeles_Lakers_players",)),
    _e("Jordan_Clarkson", ("Clarkson", 0.6), kw="basketball,lakers,guard", types=(PERSON,),
       subjects=("Los_Angeles_Lakers_players",)),
    _e("Julius_Randle", ("Randle", 0.9), kw="basketball,lakers,forward", types=(PERSON,),
       subjects=("Los_Angeles_Lakers_players",)),
    _e("James_Worthy", ("Worthy", 0.05), kw="basketball,lakers,nba", types=(PERSON,),
       subjects=("Los_Angeles_Lakers_players",)),
    _e("Lou_Williams", kw="basketball,lakers,guard", types=(PERSON,), subjects=("Los_Angeles_Lakers_players",)),
    # ambiguity and longest-match demonstrations
    _e("Michael_Jordan", ("Jordan", 0.45), kw="basketball,bulls,nba", types=(PERSON,)),
    _e("Jordan", ("Jordan", 0.5), kw="amman,king,border", name="Hashemite Kingdom of Jordan"),
    _e("Paris", ("Paris", 0.8), kw="france,french,city"),
    _e("Paris_Hilton", ("Paris", 0.15), kw="celebrity,hotel,heiress", types=(PERSON,)),
    _e("New_York", ("New York", 0.8), kw="state,albany", name="New York State"),
    _e("The_New_York_Times", ("New York Times", 0.9), ("Times", 0.01), kw="newspaper,editor,reporter",
       name="The New York Times"),
    _e("New_York_City", ("New York City", 0.9), kw="city,manhattan,mayor"),
    _e("Wall_Street", kw="banks,stocks,traders"),
    _e("United_Nations", ("U.N.", 0.9), kw="security council,resolution"),
    _e("Occupy_Wall_Street", ("Occupy", 0.3), kw="protest,banks,park", name="Occupy Wall Street"),
    _e("Zuccotti_Park", kw="protest,park,police"),
    # golf cluster for document similarity
    _e("Tiger_Woods", ("Woods", 0.6), kw="golf,tournament,course", types=(PERSON,)),
    _e("Phil_Mickelson", ("Mickelson", 0.9), kw="golf,tournament,putt", types=(PERSON,)),
    _e("Masters_Tournament", ("the Masters", 0.8), kw="golf,augusta,green jacket", name="Masters Tournament"),
    _e("Augusta_National_Golf_Club", ("Augusta National", 0.9), kw="golf,course,georgia"),
    _e("PGA_Tour", kw="golf,tournament,season", name="PGA Tour"),
    _e("Jack_Nicklaus", ("Nicklaus", 0.9), kw="golf,course,major", types=(PERSON,)),
    _e("Greg_Norman", kw="golf,tournament,australian", types=(PERSON,)),
    _e("Nick_Faldo", ("Faldo", 0.9), kw="golf,open,major", types=(PERSON,)),
]

# Categories for the evaluation suite: (category local name, members)
SUITE_CATEGORIES: dict[str, list[EntitySpec]] = {}


def _cat(category: str, *members: EntitySpec) -> None:
    SUITE_CATEGORIES[category] = list(members)


def _m(local: str, kw: str, *aliases, name: Optional[str] = None, types=(PERSON,)) -> EntitySpec:
    # a last-name alias with a prior too low to ever clear the news threshold, so
    # articles using only that form are relevant but unreachable for the linker
    display = name or local.split("_(")[0].replace("_", " ")
    words = display.split()
    last = words[-1] if len(words) > 1 else ""
    if len(last) >= 3 and all(a[0] != last for a in aliases):
        aliases = aliases + ((last, 0.04),)
    return _e(local, *aliases, kw=kw, types=types, name=name)


_cat("Best_Actor_Academy_Award_winners",
     _m("Tom_Hanks", "film,actor,oscar", ("Hanks", 0.9)), _m("Jack_Nicholson", "film,actor,oscar", ("Nicholson", 0.7)),
     _m("Dustin_Hoffman", "film,actor,oscar"), _m("Al_Pacino", "film,actor,oscar", ("Pacino", 0.9)))
_cat("Los_Angeles_Lakers_players",
     *[e for e in ENTITIES if "Los_Angeles_Lakers_players" in e.subjects])
_cat("African-American_film_producers",
     _m("Spike_Lee", "film,director,brooklyn"), _m("Oprah_Winfrey", "television,show,film", ("Oprah", 0.9)),
     _m("Quincy_Jones", "music,producer,film"))
_cat("Stimulants", *[e for e in ENTITIES if "Stimulants" in e.subjects])
_cat("Ferrari_Formula_One_drivers",
     _m("Alain_Prost", "race,grand prix,ferrari", ("Prost", 0.9)),
     _m("Nigel_Mansell", "race,grand prix,ferrari", ("Mansell", 0.9)),
     _m("Gerhard_Berger", "race,grand prix,ferrari", ("Berger", 0.1)),
     _m("Jean_Alesi", "race,grand prix,ferrari", ("Alesi", 0.9)))
_cat("Assassinated_Indian_politicians",
     _m("Indira_Gandhi", "india,prime minister,congress party", types=_POL),
     _m("Rajiv_Gandhi", "india,prime minister,congress party", types=_POL),
     _m("Lalit_Maken", "india,delhi,congress party", types=_POL))
_cat("American_crime_thriller_films",
     _m("Internal_Affairs_(film)", "film,police,thriller", name="Internal Affairs", types=()),
     _m("Miami_Blues", "film,thriller,detective", types=()),
     _m("Q_&_A_(film)", "film,thriller,district attorney", name="Q & A", types=()))
_cat("Accidents_and_incidents_involving_the_Boeing_747",
     _m("Pan_Am_Flight_103", "lockerbie,bomb,investigators", types=()),
     _m("United_Airlines_Flight_811", "cargo door,honolulu,investigators", types=()),
     _m("Japan_Air_Lines_Flight_123", "crash,mountain,investigators", types=()))
_cat("Australian_One_Day_International_cricketers",
     _m("Allan_Border", "cricket,captain,test", ("Border", 0.05)), _m("Shane_Warne", "cricket,spin,test", ("Warne", 0.9)),
     _m("Steve_Waugh", "cricket,batsman,test", ("Waugh", 0.6)), _m("Mark_Taylor_(cricketer)", "cricket,opener,test",
                                                                  name="Mark Taylor"))
_cat("Companies_listed_on_the_New_York_Stock_Exchange",
     _m("IBM", "computer,shares,company", name="I.B.M.", types=()),
     _m("General_Motors", "cars,shares,company", ("G.M.", 0.8), types=()),
     _m("Exxon", "oil,shares,company", types=()),
     _m("The_Coca-Cola_Company", "soft drink,shares,company", ("Coca-Cola", 0.9), name="Coca-Cola Company", types=()))
_cat("Video_game_consoles",
     _m("Sega_Genesis", "video game,console,players", types=()),
     _m("Super_Nintendo_Entertainment_System", "video game,console,players", ("Super Nintendo", 0.9), types=()),
     _m("Atari_Jaguar", "video game,console,players", types=()),
     _m("3DO_Interactive_Multiplayer", "video game,console,players", ("3DO", 0.9), types=()))
_cat("Recipients_of_the_Padma_Shri",
     _m("Zakir_Hussain_(musician)", "tabla,music,concert", name="Zakir Hussain"),
     _m("Shabana_Azmi", "film,actress,india"), _m("Ravi_Shankar", "sitar,music,concert", ("Shankar", 0.5)))
_cat("Bacterial_sexually_transmitted_diseases",
     _m("Syphilis", "infection,patients,health", name="syphilis", types=()),
     _m("Gonorrhea", "infection,patients,health", name="gonorrhea", types=()),
     _m("Chlamydia_infection", "infection,patients,health", name="chlamydia", types=()))
_cat("Central_Intelligence_Agency_operations",
     _m("Iran-Contra_affair", "congress,hearings,arms", name="Iran-contra affair", types=()),
     _m("Operation_Cyclone", "afghanistan,rebels,arms", types=()),
     _m("Bay_of_Pigs_Invasion", "cuba,exiles,invasion", name="Bay of Pigs", types=()))
_cat("Grammy_Award_winners",
     _m("Whitney_Houston", "singer,album,music"), _m("Eric_Clapton", "guitar,album,music", ("Clapton", 0.9)),
     _m("Lauryn_Hill", "singer,album,music"))
_cat("Indian_meat_dishes",
     _m("Tandoori_chicken", "restaurant,dish,spices", name="tandoori chicken", types=()),
     _m("Rogan_josh", "restaurant,dish,lamb", name="rogan josh", types=()),
     _m("Biryani", "restaurant,dish,rice", name="biryani", types=()))
_cat("Mammals_of_India",
     _m("Bengal_tiger", "wildlife,reserve,species", name="Bengal tiger", types=()),
     _m("Indian_elephant", "wildlife,reserve,herd", name="Indian elephant", types=()),
     _m("Indian_rhinoceros", "wildlife,reserve,species", name="Indian rhinoceros", types=()))
_cat("Fast-food_chains_of_the_United_States",
     _m("McDonald's", "restaurants,hamburgers,franchise", name="McDonald's", types=()),
     _m("Burger_King", "restaurants,hamburgers,franchise", types=()),
     _m("Taco_Bell", "restaurants,franchise,menu", types=()))
_cat("NASA_civilian_astronauts",
     _m("Christa_McAuliffe", "shuttle,teacher,space"), _m("Barbara_Morgan", "shuttle,teacher,space"),
     _m("Jake_Garn", "shuttle,senator,space", ("Garn", 0.9)))
_cat("Geological_hazards",
     _m("Earthquake", "seismic,faults,quake", name="earthquake", types=()),
     _m("Landslide", "slope,rain,mud", name="landslide", types=()),
     _m("Volcano", "eruption,lava,ash", name="volcano", types=()))

# Table-2-like needs: (category, date_from, date_to, free-text query)
SUITE_NEEDS = [
    ("Best_Actor_Academy_Award_winners", "1998-06-01", "1998-08-31", "Best actor academy award winner"),
    ("Los_Angeles_Lakers_players", "1989-07-01", "1989-08-31", "Los Angeles Lakers player"),
    ("African-American_film_producers", "1992-08-01", "1992-08-31", "African-American film producer"),
    ("Stimulants", "1990-01-05", "1990-01-08", "Stimulant drugs"),
    ("Ferrari_Formula_One_drivers", "1992-07-01", "1992-09-20", "Ferrari formula one drivers"),
    ("Assassinated_Indian_politicians", "1989-07-05", "1989-08-15", "Assassinated Indian politicians"),
    ("American_crime_thriller_films", "1990-06-01", "1990-06-19", "American crime thriller films"),
    ("Accidents_and_incidents_involving_the_Boeing_747", "1989-07-01", "1989-08-31", "boeing 747 aircraft accidents"),
    ("Australian_One_Day_International_cricketers", "1994-07-01", "1994-09-18",
     "Australian cricketers one day internationals"),
    ("Companies_listed_on_the_New_York_Stock_Exchange", "1995-07-04", "1995-07-04", "Companies listed on NYSE"),
    ("Video_game_consoles", "1994-07-01", "1994-08-15", "Video game consoles"),
    ("Recipients_of_the_Padma_Shri", "1992-07-01", "1992-09-15", "Indian Padma Shri recipients"),
    ("Bacterial_sexually_transmitted_diseases", "1993-07-01", "1993-09-30", "Bacterial stds"),
    ("Central_Intelligence_Agency_operations", "1989-07-01", "1989-07-31", "CIA operations"),
    ("Grammy_Award_winners", "1998-08-01", "1998-08-01", "grammy award winner"),
    ("Indian_meat_dishes", "1989-01-01", "1989-12-31", "Indian meat dishes"),
    ("Mammals_of_India", "1994-07-01", "1994-09-30", "Indian mammals"),
    ("Fast-food_chains_of_the_United_States", "1989-07-01", "1989-07-10", "US fast food chains"),
    ("NASA_civilian_astronauts", "1997-07-01", "1997-08-02", "NASA civilian astronauts"),
    ("Geological_hazards", "1989-07-01", "1989-08-15", "geological hazard"),
]


def all_entities() -> list[EntitySpec]:
    seen: dict[str, EntitySpec] = {}
    for e in ENTITIES:
        seen.setdefault(e.local, e)
    for members in SUITE_CATEGORIES.values():
        for e in members:
            seen.setdefault(e.local, e)
    return list(seen.values())


def _by_local() -> dict[str, EntitySpec]:
    return {e.local: e for e in all_entities()}


# -- text --

# None of these words is a gazetteer surface, so filler never yields mentions.
FILLER = [
    "Officials said the plan would be reviewed again next week.",
    "The announcement came after several days of quiet negotiation.",
    "Critics argued that the decision had been made too quickly.",
    "A spokesman declined to comment on the details of the agreement.",
    "Local residents gathered outside to follow the proceedings.",
    "The report was released late on Friday afternoon.",
    "Several experts expressed doubts about the long term effects.",
    "Attendance was higher than organizers had expected.",
    "The board is expected to vote on the measure later this month.",
    "Documents obtained by reporters describe a different sequence of events.",
    "The figures were revised upward in the second quarter.",
    "Observers noted a sharp change in tone compared with last year.",
]

BODY_TEMPLATES = [
    "{s} was at the center of the discussion about {k}.",
    "According to people familiar with the matter, {s} spoke about {k} on Tuesday.",
    "{s} has been linked to questions of {k} for some time.",
    "In a statement, {s} addressed the issue of {k}.",
    "Much of the coverage focused on {s} and {k}.",
]

TWEET_TEMPLATES = [
    "{s} again in the headlines today {k}",
    "Watching {s} right now #{t}",
    "Big night for {s} {k} #{t}",
    "Can't stop talking about {s} #{t}",
]
TWEET_FILLER = [
    "Good morning everyone, coffee first",
    "Traffic is terrible again this morning",
    "Weekend plans: nothing at all",
    "New blog post is up, link below",
    "This weather is unbelievable",
    "Finally finished that book",
]


def _mention_text(rng: random.Random, entity: EntitySpec, alias_rate: float = 0.2) -> str:
    if len(entity.surfaces) > 1 and rng.random() < alias_rate:
        return rng.choice(entity.surfaces[1:])[0]
    return entity.name


def _paragraph(rng: random.Random, entities: list[EntitySpec], alias_rate: float = 0.2) -> list[str]:
    sentences = []
    for ent in entities:
        kw = rng.choice(ent.keywords) if ent.keywords else "public life"
        sentences.append(rng.choice(BODY_TEMPLATES).format(s=_mention_text(rng, ent, alias_rate), k=kw))
        sentences.append(rng.choice(FILLER))
    rng.shuffle(sentences)
    return sentences


# -- gazetteer and knowledge base --


def gazetteer_rows() -> list[tuple[str, str, float, tuple]]:
    rows = []
    for e in all_entities():
        for surface, prior in e.surfaces:
            rows.append((surface, e.uri, prior, e.keywords))
    return rows


def write_gazetteer(path) -> Path:
    path = Path(path)
    lines = ["# surface\turi\tprior\tkeywords"]
    for surface, uri, prior, kws in gazetteer_rows():
        lines.append(f"{surface}\t{uri}\t{prior!r}\t{','.join(kws)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def kb_triples() -> list[Triple]:
    rdf_type = IRI(RDF + "type")
    subject = IRI(DCTERMS + "subject")
    label = IRI(RDFS + "label")
    out = []
    for e in all_entities():
        node = IRI(e.uri)
        out.append(Triple(node, label, Literal(e.name, lang="en")))
        for t in e.types:
            out.append(Triple(node, rdf_type, IRI(t)))
        for s in e.subjects:
            out.append(Triple(node, subject, IRI(DBC + s)))
        if e.birth_place:
            out.append(Triple(node, IRI(DBO + "birthPlace"), IRI(DBR + e.birth_place)))
        if e.birth_date:
            out.append(Triple(node, IRI(DBO + "birthDate"), Literal(e.birth_date, XSD_DATE)))
        if e.abstract_fr:
            out.append(Triple(node, IRI(DBO + "abstract"), Literal(e.abstract_fr, lang="fr")))
            out.append(Triple(node, IRI(DBO + "abstract"), Literal(f"{e.name} is a public figure.", lang="en")))
    for category, members in SUITE_CATEGORIES.items():
        for e in members:
            out.append(Triple(IRI(e.uri), subject, IRI(DBC + category)))
    return sorted(set(out), key=lambda t: (str(t.subject), str(t.predicate), str(t.object)))


def write_kb(path) -> Path:
    path = Path(path)
    path.write_text(n3.serialize_ntriples(kb_triples()), encoding="utf-8")
    return path


# -- news corpus --


@dataclass
class NewsArticleSpec:
    id: str
    date: date
    title: str
    body: str
    entities: list[str]  # URIs of every entity the text was written about

    @property
    def url(self) -> str:
        return NYT + self.id

    def to_json(self) -> str:
        return json.dumps({"id": self.id, "url": self.url, "title": self.title, "date": self.date.isoformat(),
                           "body": self.body}, ensure_ascii=False, sort_keys=True)


@dataclass
class NewsTruth:
    articles: list[NewsArticleSpec] = field(default_factory=list)

    def by_id(self) -> dict[str, NewsArticleSpec]:
        return {a.id: a for a in self.articles}


def _article_id(n: int) -> str:
    return stable_hex(f"article-{n}", 17).upper()


def _random_date(rng: random.Random, start: date, end: date) -> date:
    return start + timedelta(days=rng.randrange((end - start).days + 1))


# yearly article weights for the per-year count listing
MANDELA_BY_YEAR = {1987: 3, 1988: 4, 1989: 6, 1990: 24, 1991: 9, 1992: 7, 1993: 8, 1994: 12, 1995: 4, 1996: 3,
                   1997: 3, 1998: 2, 1999: 3, 2000: 2, 2001: 1, 2002: 1, 2003: 2, 2004: 1, 2005: 1, 2006: 1, 2007: 2}
DRUGS_1987 = {"Cocaine": 20, "Heroin": 9, "Aspirin": 5, "Zidovudine": 4, "Furosemide": 3}
DRUGS_1997 = {"Cocaine": 14, "Heroin": 10, "Nicotine": 7, "Fluoxetine": 4, "Caffeine": 3}
OBAMA_SUMMER_2007 = {"Hillary_Clinton": 12, "John_Edwards": 8, "Joe_Biden": 5, "Bill_Richardson": 4,
                     "John_McCain": 3, "Dick_Cheney": 2}
NY_LAWYERS_JUNE_1989 = {"Rudy_Giuliani": 6, "Alan_Dershowitz": 3, "Chuck_Schumer": 2, "Ruth_Bader_Ginsburg": 2,
                        "Ed_Koch": 3, "Mario_Cuomo": 2}
LAKERS_SUMMER_2016 = {"Kobe_Bryant": 6, "Julius_Randle": 3, "Jordan_Clarkson": 3, "Lou_Williams": 2}


def generate_news(n_background: int = 3000, seed: int = 7) -> NewsTruth:
    rng = random.Random(seed)
    ents = _by_local()
    # topical entities (drugs, lawyers, players, golf, Mandela) only appear in their own clusters
    topical = set(DRUGS_1987) | set(DRUGS_1997) | set(NY_LAWYERS_JUNE_1989) | set(LAKERS_SUMMER_2016) | {
        "Nelson_Mandela", "Paris_Hilton", "Magic_Johnson", "Kareem_Abdul-Jabbar", "James_Worthy", "Tiger_Woods",
        "Phil_Mickelson", "Masters_Tournament", "Augusta_National_Golf_Club", "PGA_Tour", "Jack_Nicklaus",
        "Greg_Norman", "Nick_Faldo", "Amphetamine"}
    background_pool = [e for e in ENTITIES if e.local not in topical]
    truth = NewsTruth()
    counter = [0]

    def add(day: date, members: list[EntitySpec], extra: int = 2, alias_rate: float = 0.2,
            title_words: str = "", article_id: Optional[str] = None, keywords: tuple = ()) -> None:
        n = counter[0]
        counter[0] += 1
        chosen = list(members)
        for _ in range(extra):
            cand = rng.choice(background_pool)
            if cand not in chosen:
                chosen.append(cand)
        paras = []
        sentences = _paragraph(rng, chosen, alias_rate)
        for kw in keywords:
            sentence = kw if kw.endswith(".") else f"Readers asked about {kw} in letters to the desk."
            sentences.insert(rng.randrange(len(sentences) + 1), sentence)
        for i in range(0, len(sentences), 4):
            paras.append(" ".join(sentences[i:i + 4]))
        head = members[0].name if members else chosen[0].name
        title = f"{head} {title_words or rng.choice(['in focus', 'draws attention', 'under scrutiny', 'speaks out'])}"
        truth.articles.append(NewsArticleSpec(article_id or _article_id(n), day, title, "\n".join(paras),
                                              [e.uri for e in chosen]))

    # background articles spread over 1987-2007
    for _ in range(n_background):
        day = _random_date(rng, date(1987, 1, 1), date(2007, 12, 31))
        add(day, [], extra=rng.randint(3, 6))

    # per-year Mandela coverage
    for year, count in MANDELA_BY_YEAR.items():
        for _ in range(max(1, count * n_background // 3000)):
            add(_random_date(rng, date(year, 1, 1), date(year, 12, 31)), [ents["Nelson_Mandela"]], alias_rate=0.0)
    # drugs in 1987 and 1997
    for year, table in ((1987, DRUGS_1987), (1997, DRUGS_1997)):
        for local, count in table.items():
            for _ in range(max(1, count * n_background // 3000)):
                add(_random_date(rng, date(year, 1, 1), date(year, 12, 31)), [ents[local]], alias_rate=0.0)
    # Obama with other politicians in summer 2007
    for local, count in OBAMA_SUMMER_2007.items():
        for _ in range(max(1, count * n_background // 3000)):
            add(_random_date(rng, date(2007, 6, 1), date(2007, 8, 30)), [ents["Barack_Obama"], ents[local]],
                extra=1, alias_rate=0.0)
    # New York lawyers in June 1989
    for local, count in NY_LAWYERS_JUNE_1989.items():
        for _ in range(max(1, count * n_background // 3000)):
            add(_random_date(rng, date(1989, 6, 1), date(1989, 6, 30)), [ents[local]], extra=1, alias_rate=0.0)
    # Lakers in summer 2016 (joined with the tweet layer)
    for local, count in LAKERS_SUMMER_2016.items():
        for _ in range(max(1, count * n_background // 3000)):
            add(_random_date(rng, date(2016, 6, 1), date(2016, 8, 31)), [ents[local]], extra=1, alias_rate=0.0)
    # golf cluster; the first one carries the identifier used by the similarity listing
    golf = [ents[k] for k in ("Tiger_Woods", "Phil_Mickelson", "Masters_Tournament", "Augusta_National_Golf_Club",
                              "PGA_Tour", "Jack_Nicklaus", "Greg_Norman", "Nick_Faldo")]
    add(date(1995, 4, 10), golf[:6], extra=0, alias_rate=0.0, title_words="wins at Augusta",
        article_id=GOLF_ARTICLE_ID)
    for i in range(8):
        members = golf[: 6 - i % 5] if i % 2 == 0 else golf[2 + i % 3: 8]
        add(_random_date(rng, date(1994, 1, 1), date(1996, 12, 31)), members, extra=0, alias_rate=0.0)
    # evaluation suite topics
    for category, start, end, query in SUITE_NEEDS:
        members = SUITE_CATEGORIES[category]
        d0, d1 = date.fromisoformat(start), date.fromisoformat(end)
        words = query.lower().split()
        for j in range(rng.randint(8, 14)):
            picked = rng.sample(members, rng.randint(1, min(2, len(members))))
            kws = tuple(rng.sample(words, 1)) if rng.random() < 0.3 else ()
            add(_random_date(rng, d0, d1), picked, extra=rng.randint(1, 2), alias_rate=0.35, keywords=kws)
        # decoys: in range, share the free-text words, but are not about any category member;
        # some name a member in passing, which the linker picks up (a judged false positive)
        for j in range(rng.randint(2, 4)):
            passing = (f"A street sign bearing the name {rng.choice(members).name} appeared in one photograph.",) \
                if rng.random() < 0.4 else ()
            add(_random_date(rng, d0, d1), [], extra=2, keywords=tuple(words[:2]) + passing)
        # on topic but outside the window
        add(d1 + timedelta(days=rng.randint(40, 400)), [rng.choice(members)], extra=1)
    truth.articles.sort(key=lambda a: (a.date, a.id))
    return truth


def write_news(truth: NewsTruth, path) -> Path:
    path = Path(path)
    path.write_text("".join(a.to_json() + "\n" for a in truth.articles), encoding="utf-8")
    return path


# -- tweets --


@dataclass
class TweetTruth:
    per_month_total: dict[int, int] = field(default_factory=dict)
    per_month_entity: dict[int, int] = field(default_factory=dict)
    entity_uri: str = DBR + "Barack_Obama"
    lines: list[str] = field(default_factory=list)

    def ratios(self) -> dict[int, float]:
        return {m: self.per_month_entity.get(m, 0) / n for m, n in self.per_month_total.items() if n}


SCREEN_NAMES = ["newsfan", "hoopsdaily", "citywatch", "dataherder", "quietreader", "lakeshow24", "sportsdesk"]


def generate_tweets(per_month: int = 40, seed: int = 11, year: int = 2016) -> TweetTruth:
    """Tweets of one year; month 11 deliberately has no mention of the tracked entity."""
    rng = random.Random(seed)
    ents = _by_local()
    obama = ents["Barack_Obama"]
    lakers = SUITE_CATEGORIES["Los_Angeles_Lakers_players"]
    others = [ents[k] for k in ("Hillary_Clinton", "John_McCain", "Wall_Street", "New_York_City", "Paris",
                                "Michael_Jordan", "United_Nations")]
    truth = TweetTruth()
    tid = 740000000000000000
    for month in range(1, 13):
        total = per_month + month * per_month // 13
        mentions = 0 if month == 11 else max(1, ((month * 7) % 11 + 2) * total // 50)
        days_in_month = (date(year + (month == 12), month % 12 + 1, 1) - date(year, month, 1)).days
        for i in range(total):
            tid += rng.randint(1, 9999)
            created = datetime(year, month, rng.randint(1, days_in_month), rng.randrange(24), rng.randrange(60),
                               rng.randrange(60))
            picked: list[EntitySpec] = []
            if i < mentions:
                picked.append(obama)
            if 6 <= month <= 8 and rng.random() < 0.35:
                picked.append(rng.choice(lakers))
            if rng.random() < 0.3:
                picked.append(rng.choice(others))
            if picked:
                parts = []
                for ent in picked:
                    kw = rng.choice(ent.keywords) if ent.keywords else ""
                    surface = ent.name if ent is obama else _mention_text(rng, ent, 0.2)
                    parts.append(rng.choice(TWEET_TEMPLATES).format(s=surface, k=kw, t=kw.replace(" ", "")))
                text = " / ".join(parts)
            else:
                text = rng.choice(TWEET_FILLER)
            retweets = rng.choice([0, 1, 3, 12, 49, 50, 51, 75, 140, 900])
            truth.lines.append(json.dumps({
                "id": str(tid), "text": text, "created_at": created.strftime("%Y-%m-%dT%H:%M:%SZ"),
                "favorite_count": rng.randint(0, 500), "retweet_count": retweets,
                "screen_name": rng.choice(SCREEN_NAMES),
            }, sort_keys=True))
        truth.per_month_total[month] = total
        truth.per_month_entity[month] = mentions
    return truth


def write_tweets(truth: TweetTruth, path) -> Path:
    path = Path(path)
    path.write_text("".join(line + "\n" for line in truth.lines), encoding="utf-8")
    return path


# -- web archive collection --


@dataclass
class WebTruth:
    captures: int = 0
    duplicates: int = 0
    revisits: int = 0
    urls: int = 0
    noise: int = 0
    cdx_path: Optional[Path] = None
    warc_dir: Optional[Path] = None
    # (original_url, timestamp) -> intended entity URIs of canonical captures
    entities: dict = field(default_factory=dict)


WEB_TOPICS = ["Ralph_Nader", "Chris_Hedges", "Dylan_Ratigan", "Naomi_Klein", "Matt_Taibbi", "Michael_Bloomberg",
              "Occupy_Wall_Street", "Zuccotti_Park", "Wall_Street", "Barack_Obama", "New_York_City"]
WEB_WEIGHTS = [9, 6, 5, 4, 3, 4, 6, 5, 5, 3, 4]


def _page_html(rng: random.Random, url: str, title: str, paragraphs: list[str], links: list[str]) -> bytes:
    nav = "".join(f'<li><a href="{href}">section {i}</a></li>' for i, href in enumerate(links[:4]))
    body_links = "".join(f'<p>See also <a href="{href}">related page</a></p>' for href in links[4:])
    paras = "".join(f"<p>{p}</p>" for p in paragraphs)
    html = (f"<!DOCTYPE html><html><head><meta charset=\"utf-8\"><title>{title}</title>"
            f"<script>var t = {rng.randrange(10**6)};</script></head><body><nav><ul>{nav}</ul></nav>"
            f"<div class=\"content\">{paras}</div>{body_links}<footer>Archived page</footer></body></html>")
    return html.encode("utf-8")


def generate_web(out_dir, n_urls: int = 150, seed: int = 5, n_files: int = 3) -> WebTruth:
    """Write WARC files and one CDX index; exactly 15% of eligible captures are digest duplicates.

    ``n_urls`` must be a multiple of 5 so the capture and duplicate counts are integers
    (capture counts cycle through 2..6, i.e. 4 per URL on average).
    """
    if n_urls % 5:
        raise ValueError("n_urls must be a multiple of 5")
    out_dir = Path(out_dir)
    warc_dir = out_dir / "warcs"
    warc_dir.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed)
    ents = _by_local()
    pool = [ents[k] for k in WEB_TOPICS]
    urls = [f"http://occupy{u % 7}.example.org/story/{u:03d}.html" for u in range(n_urls)]
    counts = [2 + (u % 5) for u in range(n_urls)]
    total = sum(counts)
    n_dup = total * 15 // 100
    slots = [(u, j) for u in range(n_urls) for j in range(1, counts[u])]
    dup_slots = set(rng.sample(slots, n_dup))
    truth = WebTruth(captures=total, duplicates=n_dup, urls=n_urls, warc_dir=warc_dir)
    writers = [WarcWriter(warc_dir / f"collection-{i}.warc.gz") for i in range(n_files)]
    records = []
    try:
        for u, url in enumerate(urls):
            writer = writers[u % n_files]
            start = datetime(2011, 10, 1) + timedelta(hours=7 * u)
            payloads: list[bytes] = []
            digests: list[str] = []
            canonical_of: list[int] = []
            when = start
            for j in range(counts[u]):
                when = when + timedelta(days=rng.randint(3, 40), minutes=rng.randint(0, 600))
                ts = format_timestamp(when)
                if (u, j) in dup_slots:
                    # copy an earlier canonical capture (not necessarily the previous one)
                    src = rng.choice([k for k in range(j) if canonical_of[k] == k])
                    canonical_of.append(src)
                    if rng.random() < 0.5:
                        rec = writer.write_revisit(url, ts, digests[src], format_timestamp(start))
                        truth.revisits += 1
                    else:
                        rec = writer.write_response(url, ts, payloads[src])
                    payloads.append(payloads[src])
                    digests.append(rec.digest)
                else:
                    canonical_of.append(j)
                    k = rng.choices(range(len(pool)), weights=WEB_WEIGHTS, k=rng.randint(2, 4))
                    picked = list(dict.fromkeys(pool[i] for i in k))
                    sentences = _paragraph(rng, picked, 0.0)
                    sentences.append(f"This page was updated on {when.strftime('%B %d, %Y at %H:%M')}.")
                    paras = [" ".join(sentences[i:i + 3]) for i in range(0, len(sentences), 3)]
                    links = [urls[(u + d) % n_urls] for d in (1, 2, 3, 5, 8)] + [url + "#top"]
                    payload = _page_html(rng, url, f"{picked[0].name} and the movement", paras, links)
                    rec = writer.write_response(url, ts, payload)
                    payloads.append(payload)
                    digests.append(rec.digest)
                    truth.entities[(url, ts)] = [e.uri for e in picked]
                records.append(rec)
        # noise removed by the metadata filter: images, 404s and oversized pages
        w = writers[0]
        for i in range(max(2, n_urls // 10)):
            img = bytes(rng.randrange(256) for _ in range(300)) + i.to_bytes(2, "big")
            records.append(w.write_response(f"http://occupy{i % 7}.example.org/img/{i}.png",
                                            f"2012{(i % 12) + 1:02d}15120000", img, mime="image/png"))
            records.append(w.write_response(f"http://occupy{i % 7}.example.org/missing/{i}.html",
                                            f"2012{(i % 12) + 1:02d}16120000", f"<html>gone {i}</html>".encode(),
                                            status=404))
            truth.noise += 2
        for i in range(2):
            blob = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz0123456789") for _ in range(170_000))
            big = f"<html><head><title>Dump {i}</title></head><body><p>{blob}</p></body></html>".encode()
            records.append(w.write_response(f"http://occupy{i}.example.org/dump/{i}.html", "20120301000000", big))
            truth.noise += 1
    finally:
        for w in writers:
            w.close()
    cdx = out_dir / "collection.cdx"
    write_cdx(records, cdx)
    truth.cdx_path = cdx
    return truth


# -- evaluation suite --


@dataclass
class NeedSpec:
    id: int
    category: str
    date_from: str
    date_to: str
    keywords: str

    @property
    def description(self) -> str:
        label = self.category.replace("_", " ")
        return f"Find articles of {self.date_from} to {self.date_to} mentioning {label}"

    def sparql(self) -> str:
        return (
            "SELECT DISTINCT ?article WHERE {\n"
            f"  SERVICE <{KB_SERVICE}> {{ ?entity dc:subject <{DBC}{self.category}> }}\n"
            f"  ?article dc:date ?date FILTER(?date >= \"{self.date_from}\"^^xsd:date && "
            f"?date <= \"{self.date_to}\"^^xsd:date)\n"
            "  ?article schema:mentions ?m .\n"
            "  ?m oae:hasMatchedURI ?entity\n"
            "}\n"
        )


def suite_needs() -> list[NeedSpec]:
    return [NeedSpec(i + 1, c, a, b, q) for i, (c, a, b, q) in enumerate(SUITE_NEEDS)]


def write_suite(out_dir, truth: NewsTruth) -> tuple[Path, Path]:
    """Write needs.tsv, one .rq per need and judgments.tsv (relevant iff an intended
    entity of the article belongs to the need's category and the date is in range)."""
    out_dir = Path(out_dir)
    qdir = out_dir / "queries"
    qdir.mkdir(parents=True, exist_ok=True)
    needs_lines = ["# id\tdate_from\tdate_to\tkeywords\tsparql\tdescription"]
    judg_lines = ["# need_id\tdoc_id\tlabel"]
    for need in suite_needs():
        qpath = qdir / f"need{need.id:02d}.rq"
        qpath.write_text(need.sparql(), encoding="utf-8")
        needs_lines.append("\t".join([str(need.id), need.date_from, need.date_to, need.keywords,
                                      f"queries/{qpath.name}", need.description]))
        members = {e.uri for e in SUITE_CATEGORIES[need.category]}
        d0, d1 = date.fromisoformat(need.date_from), date.fromisoformat(need.date_to)
        for art in truth.articles:
            if d0 <= art.date <= d1:
                label = "relevant" if members & set(art.entities) else "irrelevant"
                judg_lines.append(f"{need.id}\t{art.url}\t{label}")
    needs = out_dir / "needs.tsv"
    judgments = out_dir / "judgments.tsv"
    needs.write_text("\n".join(needs_lines) + "\n", encoding="utf-8")
    judgments.write_text("\n".join(judg_lines) + "\n", encoding="utf-8")
    return needs, judgments


# -- one-shot writer --


@dataclass
class FixtureSet:
    root: Path
    gazetteer: Path
    kb: Path
    news: Path
    tweets: Path
    web: WebTruth
    news_truth: NewsTruth
    tweet_truth: TweetTruth
    needs: Path
    judgments: Path
    configs: dict[str, Path]


def _write_config(path: Path, **values) -> Path:
    lines = [f"{k} = {v}" for k, v in values.items() if v is not None]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_fixtures(out_dir, scale: str = "full") -> FixtureSet:
    """Write every fixture input plus build configs for the three layer kinds.

    ``scale="small"`` produces inputs whose layers each stay under 10,000 triples.
    """
    root = Path(out_dir)
    root.mkdir(parents=True, exist_ok=True)
    small = scale == "small"
    gaz = write_gazetteer(root / "gazetteer.tsv")
    kb = write_kb(root / "kb.nt")
    news_truth = generate_news(n_background=60 if small else 3000)
    news = write_news(news_truth, root / "news.jsonl")
    tweet_truth = generate_tweets(per_month=6 if small else 40)
    tweets = write_tweets(tweet_truth, root / "tweets.jsonl")
    web = generate_web(root / "web", n_urls=20 if small else 150)
    needs, judgments = write_suite(root / "suite", news_truth)
    configs = {
        "warc": _write_config(root / "warc.conf", kind="warc", cdx="web/collection.cdx", warc_dir="web/warcs",
                              gazetteer="gazetteer.tsv", version_url_template=WAYBACK_TEMPLATE,
                              output="layers/web.n3", threads=1),
        "news": _write_config(root / "news.conf", kind="news", news="news.jsonl", gazetteer="gazetteer.tsv",
                              output="layers/news.n3", threads=1),
        "tweets": _write_config(root / "tweets.conf", kind="tweets", tweets="tweets.jsonl",
                                gazetteer="gazetteer.tsv", output="layers/tweets.n3", threads=1),
    }
    return FixtureSet(root, gaz, kb, news, tweets, web, news_truth, tweet_truth, needs, judgments, configs)
