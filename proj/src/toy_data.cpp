#include "pabst/toy_data.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <set>
#include <sstream>

#include "pabst/jsonl.hpp"
#include "pabst/text.hpp"

namespace pabst {
namespace {

struct AttributeSpec {
  const char* text;
  std::vector<const char*> responses;
};

// Dialog side of an interest; story_topics() holds the narrative side at the
// same position.
struct Topic {
  const char* name;
  std::vector<AttributeSpec> attributes;
  std::vector<const char*> questions;
};

struct SlotValues {
  const char* key;
  std::vector<const char*> values;
};

const std::vector<Topic>& topics() {
  static const std::vector<Topic> t = {
      {"dog",
       {{"i have a dog named {pet} .",
         {"yes , i have a dog named {pet} .", "my dog {pet} is my best friend ."}},
        {"i walk my dog to the {place} every morning .",
         {"every morning i walk my dog to the {place} .",
          "my dog and i go to the {place} each morning ."}},
        {"my dog loves to chase a {obj} .",
         {"my dog loves to chase a {obj} at the {place} .",
          "we play with a {obj} , my dog loves it ."}}},
       {"do you have any pets ?", "what do you do in the morning ?", "do you like animals ?"}},
      {"cooking",
       {{"i love to cook {dish} .",
         {"i love to cook , mostly {dish} with {ingr} .",
          "i cook {dish} a lot , it is my favorite hobby ."}},
        {"i bake {dish} every weekend .",
         {"i bake {dish} every weekend for my family .", "on weekends i bake fresh {dish} ."}},
        {"i always cook with {ingr} .",
         {"i always cook with {ingr} and {ingr2} .",
          "{ingr} makes every meal better , i cook with it daily ."}}},
       {"what do you like to eat ?", "do you cook ?", "what do you do on weekends ?"}},
      {"travel",
       {{"i love going to the {place} .",
         {"i love going to the {place} in the summer .",
          "going to the {place} is my favorite way to relax ."}},
        {"i have traveled to {city} .",
         {"i have traveled to {city} , it was amazing .",
          "last year i traveled to {city} with friends ."}},
        {"i want to visit the {place2} in {city} one day .",
         {"i want to visit the {place2} in {city} one day .",
          "my dream is to see the {place2} in {city} ."}}},
       {"where do you like to travel ?", "what do you do in the summer ?",
        "do you like to travel ?"}},
      {"music",
       {{"i play the {instrument} .",
         {"i play the {instrument} , i practice every day .",
          "yes , i play the {instrument} for hours ."}},
        {"i sing in a band at the {place} .",
         {"i sing in a band with my friends at the {place} .",
          "my band plays at the {place} on fridays , i sing ."}},
        {"i wrote a {song} for my {rel} .",
         {"i wrote a {song} for my {rel} last year .", "my {rel} loves the {song} i wrote ."}}},
       {"do you like music ?", "what do you do for fun ?", "do you play any instruments ?"}},
      {"running",
       {{"i run {num} miles every day .",
         {"i run {num} miles every day , it keeps me healthy .",
          "running {num} miles every day is part of my routine ."}},
        {"i am training for a marathon in {month} .",
         {"i am training for a marathon in {month} .",
          "yes , i run a lot because of the marathon in {month} ."}},
        {"i love to run by the {place} .",
         {"i love to run by the {place} in the fresh air .", "every day i run by the {place} ."}}},
       {"how do you stay healthy ?", "do you exercise ?", "what do you do after work ?"}},
      {"garden",
       {{"i grow {plant} in my {place} .",
         {"i grow {plant} and {plant2} in my {place} .", "my {place} has the best {plant} ."}},
        {"i love {plant2} .",
         {"i love {plant2} , they make me happy .", "{plant2} are my favorite flowers , i love them ."}},
        {"i spend weekends gardening .",
         {"i spend my weekends gardening in the {place} .",
          "on weekends i spend hours gardening ."}}},
       {"what are your hobbies ?", "what do you do on weekends ?", "do you like plants ?"}},
      {"nurse",
       {{"i work as a nurse at the {place} .",
         {"i work as a nurse at the local {place} .", "i am a nurse at the {place} , i work hard ."}},
        {"i work night shifts at the hospital .",
         {"i work night shifts at the hospital , so i sleep during the day .",
          "night shifts at the hospital are tiring ."}},
        {"i love helping people .",
         {"i love helping people , that is why i became a nurse .",
          "helping people makes me happy , i love it ."}}},
       {"what do you do for a living ?", "what is your job ?", "do you work ?"}},
      {"family",
       {{"i have {num} children .",
         {"i have {num} children , boys and girls .", "i am a parent of {num} children ."}},
        {"i love spending time with my family .",
         {"i love spending time with my family on sundays .",
          "my family is the most important thing , i love spending time with them ."}},
        {"my kids play {sport} .",
         {"my kids play {sport} every saturday .", "i watch my kids play {sport} on weekends ."}}},
       {"do you have kids ?", "tell me about your family .", "what do you do on saturdays ?"}},
      {"books",
       {{"i love reading a good {booktype} .",
         {"i love reading a good {booktype} at night .",
          "reading a {booktype} is my favorite way to relax ."}},
        {"my favorite book is about {bookthing} .",
         {"my favorite book is about {bookthing} .",
          "i just read a great book about {bookthing} , it is my favorite ."}},
        {"i go to the {place} every week .",
         {"i go to the {place} every week to get new books .",
          "the {place} is my favorite place , i go every week ."}}},
       {"what do you do to relax ?", "do you like to read ?", "what is your favorite book ?"}},
      {"cars",
       {{"i drive a {color} {vehicle} .",
         {"i drive a {color} {vehicle} , it is old but strong .",
          "my {vehicle} is {color} , i drive it everywhere ."}},
        {"i like to fix old cars .",
         {"i like to fix old cars in my garage , mostly the {part} .",
          "fixing the {part} on old cars is my hobby ."}},
        {"i love road trips to the {place} .",
         {"i love road trips to the {place} , i drive for hours .",
          "my favorite road trips go to the {place} ."}}},
       {"what do you drive ?", "what are your hobbies ?", "do you like cars ?"}},
  };
  return t;
}

const std::vector<std::pair<const char*, const char*>>& greetings() {
  static const std::vector<std::pair<const char*, const char*>> g = {
      {"hi , how are you ?", "i am good , thanks . how are you ?"},
      {"hello !", "hi there , nice to meet you ."},
      {"hey , what is up ?", "not much , just relaxing ."},
      {"good morning !", "good morning to you too ."},
  };
  return g;
}

struct StoryTopic {
  std::vector<const char*> openers;
  std::vector<const char*> middles;
  std::vector<const char*> closers;
  std::vector<SlotValues> lexicon;
};

const std::vector<SlotValues>& shared_lexicon() {
  static const std::vector<SlotValues> v = {
      {"adj", {"tiny",   "huge",   "shiny",  "noisy",  "quiet",  "lazy",   "brave",  "clever",
               "fluffy", "muddy",  "bright", "dusty",  "strange", "lovely", "funny",  "heavy",
               "soft",   "wooden", "rusty",  "gentle", "wild",   "famous", "cheap",  "fancy",
               "simple", "sleepy", "golden", "silver", "dark",   "warm",   "sweet",  "tall"}},
      {"adj2", {"new", "old", "big", "small", "pretty", "ugly", "cool", "great", "little",
                "perfect", "broken", "plain", "modern", "classic", "round", "spotted"}},
      {"feel", {"happy", "relieved", "proud", "thrilled", "grateful", "calm", "excited",
                "tired", "amazed", "delighted", "nervous", "cheerful"}},
      {"rel", {"uncle", "aunt", "cousin", "neighbor", "coworker", "grandmother", "grandfather",
               "brother", "sister", "roommate", "teacher", "boss", "friend", "landlord"}},
      {"day", {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"}},
      {"month", {"january", "february", "march", "april", "may", "june", "july", "august",
                 "september", "october", "november", "december"}},
      {"time", {"morning", "evening", "afternoon", "night", "weekend"}},
      {"num", {"two", "three", "four", "five", "six", "seven", "eight", "ten", "twelve"}},
      {"color", {"red", "blue", "green", "yellow", "purple", "orange", "pink", "brown", "gray",
                 "black", "white"}},
  };
  return v;
}

const std::vector<StoryTopic>& story_topics() {
  static const std::vector<StoryTopic> t = {
      {{"{N} has a {adj} dog named {Pet}.", "{N} adopted a {color} puppy from the shelter in {month}."},
       {"Every {time} {he} walks the dog to the {place}.",
        "The dog loves to chase a {color} {obj} with {him}.",
        "One {day} the dog ran away after a {obj}.",
        "{N} looked for the dog near the {place} all {time}.",
        "The dog barked at {his} {rel}.",
        "{He} bought the dog a {adj2} {obj2}.",
        "{His} {rel} taught the dog to find a {obj}.",
        "The dog dug a hole by the {place2}."},
       {"Finally the dog came home and {N} was {feel}.", "Now the dog sleeps next to {his} {obj2}.",
        "{N} loves {his} {adj2} dog very much."},
       {{"pet", {"biscuit", "buddy", "rocky", "daisy", "lucky", "bella", "charlie", "luna", "cooper",
                 "milo", "rosie", "bear", "ziggy", "pepper"}},
        {"obj", {"ball", "stick", "bone", "frisbee", "leash", "collar", "blanket", "toy", "rope",
                 "sock", "shoe", "pillow", "treat", "bowl", "slipper"}},
        {"obj2", {"sofa", "bed", "heater", "window", "basket", "couch", "fireplace", "desk"}},
        {"place", {"park", "river", "beach", "forest", "field", "lake", "trail", "meadow"}},
        {"place2", {"fence", "porch", "mailbox", "shed", "gate", "hedge"}}}},
      {{"{N} loves to cook {dish} for {his} {rel}.", "{N} decided to bake a {adj} {dish} on {day}."},
       {"{He} went to the {place} to buy {ingr} and {ingr2}.",
        "The kitchen smelled of {ingr} and fresh {dish}.",
        "{He} burned the first batch of {dish}.",
        "{His} {rel} loved the {adj2} {dish}.",
        "{He} followed an old recipe from {his} {rel}.",
        "The oven was too hot, so {he} opened the {obj}.",
        "{He} added {num} spoons of {ingr2}.",
        "{He} spilled {ingr} all over the {obj}."},
       {"Everyone asked {him} to cook again next {time}.", "{N} was {feel} about {his} {dish}.",
        "Now {he} cooks {dish} every {day}."},
       {{"dish", {"lasagna", "risotto", "curry", "stew", "omelet", "pie", "cake", "muffins",
                  "cookies", "dumplings", "noodles", "casserole", "bread", "pancakes", "chili"}},
        {"ingr", {"flour", "butter", "garlic", "basil", "cheese", "onions", "mushrooms", "lemons",
                  "honey", "cinnamon", "ginger", "pepper", "rice", "carrots"}},
        {"ingr2", {"sugar", "salt", "cream", "olives", "spinach", "beans", "chocolate", "vanilla",
                   "yogurt", "walnuts"}},
        {"obj", {"window", "counter", "table", "floor", "stove", "apron"}},
        {"place", {"market", "bakery", "store", "farm", "grocery"}}}},
      {{"{N} went to the {place} with {his} {rel}.", "{N} saved money to travel to {City} in {month}."},
       {"The water was {adj} and {color}.",
        "{He} walked to the old {place2} with a {obj}.",
        "{He} took {num} pictures of the {place2}.",
        "The hotel was near the {place}.",
        "{He} lost {his} {obj} at the airport.",
        "{He} tried the local {food} on {day}.",
        "{His} {rel} bought a {adj2} {obj2} at the {place2}.",
        "It rained all {time}, so {he} stayed inside."},
       {"It was the best {month} of {his} life.", "{N} wants to travel to {City} again next year.",
        "{He} came home {feel} with a {obj2}."},
       {{"city", {"paris", "london", "rome", "madrid", "berlin", "lisbon", "vienna", "prague",
                  "dublin", "athens", "tokyo", "cairo"}},
        {"obj", {"camera", "map", "suitcase", "backpack", "ticket", "passport", "hat",
                 "sunglasses", "guidebook", "umbrella", "wallet"}},
        {"obj2", {"postcard", "scarf", "vase", "painting", "bracelet", "magnet", "rug", "lamp"}},
        {"food", {"cheese", "seafood", "soup", "pastries", "noodles", "fruit", "sausages"}},
        {"place", {"beach", "coast", "island", "harbor", "lake", "mountains"}},
        {"place2", {"museum", "castle", "cathedral", "bridge", "village", "temple", "palace",
                    "market", "tower"}}}},
      {{"{N} started to play the {instrument} as a kid.",
        "{N} joined a {adj} rock band in {month}."},
       {"{He} practiced the {instrument} every {time}.",
        "The band played a {song} at the {place}.",
        "{He} was {feel} before the concert.",
        "The crowd loved the {adj2} {song}.",
        "{He} broke a string during the {song}.",
        "{His} {rel} came to hear {him} sing.",
        "{He} bought a {color} {instrument} on {day}.",
        "{He} wrote {num} songs about {his} {rel}."},
       {"After the show {N} felt like a star.", "Now {he} plays music every {day}.",
        "{N} dreams of playing at the {place2}."},
       {{"instrument", {"guitar", "piano", "drums", "violin", "trumpet", "flute", "cello",
                        "saxophone", "banjo", "harmonica", "ukulele"}},
        {"song", {"ballad", "anthem", "lullaby", "melody", "tune", "solo", "chorus", "waltz"}},
        {"place", {"bar", "club", "theater", "festival", "church", "studio", "cafe"}},
        {"place2", {"stadium", "opera", "arena", "carnival", "fair"}}}},
      {{"{N} decided to run a marathon in {month}.", "{N} runs {num} miles every {time}."},
       {"{He} trained every {day} for months.",
        "{His} legs hurt after the long run by the {place}.",
        "{He} bought new {color} {obj}.",
        "On race day it was {adj} and rainy.",
        "{He} ran past the {place2} at sunrise.",
        "{His} {rel} cheered for {him}.",
        "{He} drank {num} bottles of water.",
        "{He} lost {his} {obj} near the {place}."},
       {"{N} finished the race and felt {feel}.", "{He} won a {adj2} medal.",
        "Now {he} runs every {day}."},
       {{"obj", {"shoes", "watch", "jacket", "headphones", "socks", "gloves", "cap", "shorts"}},
        {"place", {"river", "track", "trail", "hill", "harbor", "canal", "stadium"}},
        {"place2", {"bridge", "lighthouse", "windmill", "school", "bakery", "chapel"}}}},
      {{"{N} planted {plant} in {his} {place}.", "{N} loves to grow {plant} and {plant2}."},
       {"{He} watered the {plant} every {time}.",
        "The rabbits ate some of the {plant}.",
        "{He} built a {adj} fence around the {place}.",
        "The {plant2} bloomed in {month}.",
        "{He} gave {plant2} to {his} {rel}.",
        "It did not rain for {num} weeks.",
        "{He} bought a {color} {tool} on {day}.",
        "{His} {rel} helped {him} with the {tool}."},
       {"By summer {N} had a basket of {plant}.", "The {place} was full of {color} {plant2}.",
        "{N} was {feel} about {his} {place}."},
       {{"plant", {"tomatoes", "peppers", "carrots", "lettuce", "cucumbers", "strawberries",
                   "pumpkins", "beans", "potatoes", "radishes", "herbs", "melons"}},
        {"plant2", {"roses", "tulips", "daisies", "sunflowers", "lilies", "orchids", "violets",
                    "poppies", "lavender"}},
        {"tool", {"shovel", "hose", "rake", "bucket", "ladder", "wheelbarrow", "trowel"}},
        {"place", {"garden", "backyard", "greenhouse", "yard"}}}},
      {{"{N} works as a nurse at the {adj} hospital.", "{N} started a new job at the {place} in {month}."},
       {"{He} worked a long {time} shift.",
        "A {adj2} {patient} was very sick.",
        "{He} stayed with the {patient} all {time}.",
        "The doctor thanked {him} for the help.",
        "{He} was very {feel} after work.",
        "{His} {rel} brought {him} {drink}.",
        "{He} found a {obj} in the {place}.",
        "{He} treated {num} patients on {day}."},
       {"{N} went home and slept all day.", "{He} loves helping people.",
        "The {patient} got better and smiled at {him}."},
       {{"patient", {"boy", "girl", "farmer", "soldier", "baker", "painter", "sailor", "pilot",
                     "student", "grandpa", "toddler"}},
        {"drink", {"coffee", "tea", "cocoa", "lemonade", "juice"}},
        {"obj", {"bandage", "blanket", "chart", "pillow", "stethoscope", "thermometer"}},
        {"place", {"clinic", "ward", "lobby", "cafeteria", "pharmacy"}}}},
      {{"{N} has {num} children.", "{N} took {his} kids to a {sport} game on {day}."},
       {"The kids played in the {place} all {time}.",
        "{His} son scored a goal in {sport}.",
        "{He} made {food} for the family.",
        "The children laughed and flew a {color} kite.",
        "It started to rain during the {sport} game.",
        "{He} hugged {his} daughter.",
        "{His} {rel} brought a {adj} {obj}.",
        "The family visited the {place2} in {month}."},
       {"The family went home {feel}.", "{N} loves spending time with {his} children.",
        "It was a great {day} for the family."},
       {{"sport", {"soccer", "baseball", "basketball", "tennis", "hockey", "volleyball",
                   "rugby", "cricket"}},
        {"food", {"sandwiches", "burgers", "tacos", "hotdogs", "popcorn", "lemonade"}},
        {"obj", {"puzzle", "bicycle", "skateboard", "telescope", "balloon", "trampoline"}},
        {"place", {"park", "yard", "playground", "pool"}},
        {"place2", {"zoo", "aquarium", "circus", "farm", "museum"}}}},
      {{"{N} loves to read books about {bookthing}.", "{N} went to the {place} to find a new {booktype}."},
       {"{He} found a {adj} {booktype} about {bookthing}.",
        "{He} read the {booktype} all {time}.",
        "The {place} was quiet and warm.",
        "{He} forgot to return the book for {num} weeks.",
        "The story was full of {bookthing}.",
        "{He} told {his} {rel} about the book.",
        "{He} wrote a {booktype} about {his} {rel}.",
        "{He} read by the {place2} on {day}."},
       {"{N} could not wait to read another {booktype}.", "Now {he} goes to the {place} every {day}.",
        "{N} finished the book and felt {feel}."},
       {{"bookthing", {"dragons", "pirates", "space", "history", "wizards", "robots",
                       "detectives", "knights", "oceans", "volcanoes", "ghosts", "dinosaurs"}},
        {"booktype", {"novel", "comic", "poem", "diary", "magazine", "mystery", "biography"}},
        {"place", {"library", "bookstore", "cafe", "attic"}},
        {"place2", {"fireplace", "window", "river", "pond", "lamp"}}}},
      {{"{N} bought an old {color} {vehicle} in {month}.", "{N} likes to fix old cars with {his} {rel}."},
       {"The {vehicle} would not start in the {time}.",
        "{He} worked on the {part} in {his} garage.",
        "{He} drove the {vehicle} across the {place}.",
        "The car broke down near the {place2}.",
        "{He} called {his} {rel} for help.",
        "{He} painted the {vehicle} {color2}.",
        "{He} bought a {adj} {part} on {day}.",
        "{He} drove {num} hours without a break."},
       {"Finally the old {vehicle} ran like new.", "{N} was {feel} about {his} work.",
        "{He} took a long road trip to the {place} to celebrate."},
       {{"vehicle", {"truck", "van", "jeep", "sedan", "convertible", "pickup", "motorcycle",
                     "wagon", "coupe"}},
        {"part", {"engine", "brakes", "tires", "radiator", "battery", "mirror", "bumper",
                  "muffler"}},
        {"color2", {"silver", "gold", "crimson", "teal", "navy", "ivory"}},
        {"place", {"desert", "mountains", "coast", "prairie", "valley"}},
        {"place2", {"gas station", "junkyard", "tunnel", "diner", "motel"}}}},
  };
  return t;
}

// "a" before a vowel-initial word becomes "an".
std::string fix_articles(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    std::string w = words[i];
    if ((w == "a" || w == "A") && i + 1 < words.size() &&
        std::string("aeiouAEIOU").find(words[i + 1][0]) != std::string::npos) {
      w += "n";
    }
    if (i) out += " ";
    out += w;
  }
  return out;
}

using Slots = std::vector<std::pair<std::string, std::string>>;

std::string fill(std::string text, const Slots& slots) {
  for (const auto& [key, value] : slots) {
    const std::string pattern = "{" + key + "}";
    size_t pos = 0;
    while ((pos = text.find(pattern, pos)) != std::string::npos) {
      text.replace(pos, pattern.size(), value);
      pos += value.size();
    }
  }
  if (text.find('{') != std::string::npos) throw Error("unfilled template slot: " + text);
  return text;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[uniform_index(rng, v.size())];
}

// One value per lexicon key, drawn from the first `limit` values, under both
// "key" and "Key".
void add_slots(Slots& s, const std::vector<SlotValues>& lexicon, Rng& rng, size_t limit) {
  for (const SlotValues& sv : lexicon) {
    const std::string v = sv.values[uniform_index(rng, std::min(limit, sv.values.size()))];
    s.push_back({sv.key, v});
    s.push_back({capitalized(sv.key), capitalized(v)});
  }
}

// Personas talk about a narrower slice of each lexicon than stories do.
constexpr size_t kDialogLexiconLimit = 4;

Slots dialog_slots(Rng& rng, size_t topic) {
  Slots s;
  add_slots(s, shared_lexicon(), rng, kDialogLexiconLimit);
  add_slots(s, story_topics()[topic].lexicon, rng, kDialogLexiconLimit);
  return s;
}

// A persona attribute: topic and attribute indices plus its slot values.
struct AttributeRef {
  size_t topic;
  size_t attribute;
  Slots slots;
};

struct PersonaDraft {
  Persona persona;
  std::vector<AttributeRef> refs;
};

PersonaDraft draw_persona(Rng& rng, const std::string& id) {
  PersonaDraft d;
  d.persona.id = id;
  std::vector<size_t> order(topics().size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const size_t count = 4;
  for (size_t k = 0; k < count; ++k) {
    const Topic& t = topics()[order[k]];
    const size_t a = uniform_index(rng, t.attributes.size());
    d.refs.push_back({order[k], a, dialog_slots(rng, order[k])});
    d.persona.attributes.push_back(fix_articles(fill(t.attributes[a].text, d.refs.back().slots)));
  }
  return d;
}

std::string response_for(const AttributeRef& ref, Rng& rng) {
  return fix_articles(
      fill(pick(topics()[ref.topic].attributes[ref.attribute].responses, rng), ref.slots));
}

DialogExample draw_dialog(const PersonaDraft& p, Rng& rng) {
  DialogExample ex;
  ex.persona = p.persona.attributes;
  const AttributeRef& ref = pick(p.refs, rng);
  if (uniform_index(rng, 2) == 0) {
    const auto& [hi, reply] = pick(greetings(), rng);
    ex.history.push_back({Speaker::kUser, hi});
    ex.history.push_back({Speaker::kAgent, reply});
  }
  ex.history.push_back({Speaker::kUser, pick(topics()[ref.topic].questions, rng)});
  ex.response = response_for(ref, rng);
  return ex;
}

std::string draw_story(Rng& rng,
                       const std::vector<std::pair<std::string, Gender>>& name_list) {
  const size_t topic = uniform_index(rng, story_topics().size());
  const StoryTopic& t = story_topics()[topic];
  const auto& [name, gender] = pick(name_list, rng);
  const bool male = gender == Gender::kMale;
  Slots fixed = {{"N", name},
                 {"He", male ? "He" : "She"},
                 {"he", male ? "he" : "she"},
                 {"His", male ? "His" : "Her"},
                 {"his", male ? "his" : "her"},
                 {"him", male ? "him" : "her"}};
  add_slots(fixed, t.lexicon, rng, SIZE_MAX);
  // Shared-lexicon slots are redrawn for every sentence.
  const auto sentence = [&](const char* tmpl) {
    Slots slots = fixed;
    add_slots(slots, shared_lexicon(), rng, SIZE_MAX);
    return fill(tmpl, slots);
  };

  std::vector<size_t> middle(t.middles.size());
  for (size_t i = 0; i < middle.size(); ++i) middle[i] = i;
  for (size_t i = middle.size(); i > 1; --i) std::swap(middle[i - 1], middle[uniform_index(rng, i)]);
  const size_t n_middle = 2 + uniform_index(rng, 2);
  std::string story = sentence(pick(t.openers, rng));
  for (size_t k = 0; k < n_middle; ++k) story += " " + sentence(t.middles[middle[k]]);
  story += " " + sentence(pick(t.closers, rng));
  return fix_articles(story);
}

std::vector<std::pair<std::string, Gender>> name_list(const NameTable& names) {
  // A fixed list keeps generation independent of hash-map iteration order.
  static const char* kNames[] = {"Tom",   "John",  "Mary",  "Sarah", "David", "Anna",  "Mike",
                                 "Emma",  "Peter", "Lisa",  "Jack",  "Kate",  "Ben",   "Laura",
                                 "Sam",   "Susan", "Max",   "Alice", "Bob",   "Jane",  "James",
                                 "Emily", "Paul",  "Nina",  "Mark",  "Julia", "Chris", "Olivia"};
  std::vector<std::pair<std::string, Gender>> out;
  for (const char* n : kNames) {
    const Gender g = names.gender(n);
    if (g != Gender::kUnknown) out.push_back({n, g});
  }
  if (out.empty()) throw ValidationError("name table has none of the story names");
  return out;
}

const std::set<std::string>& stop_words() {
  static const std::set<std::string> s = {
      "i",    "a",     "an",   "the",  "is",   "am",    "are",  "was",  "it",   "my",
      "me",   "to",    "of",   "in",   "on",   "at",    "for",  "and",  "or",   "but",
      "so",   "with",  "do",   "you",  "yes",  "that",  "this", "they", "them", "we",
      "be",   "have",  "has",  "very", "too",  "like",  "why",  "what", "about", "one",
      "just", "really", "there", "lot", "mostly", "especially", "never", "most", "thing",
      "kind", "part",  "because", "during", "then", "he", "she", "his", "her", "him"};
  return s;
}

}  // namespace

std::vector<std::string> content_words(const std::string& text) {
  std::vector<std::string> out;
  for (const std::string& tok : tokenize(text)) {
    if (is_punctuation(tok) || is_clitic(tok)) continue;
    std::string lower = tok;
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (stop_words().count(lower) == 0) out.push_back(lower);
  }
  return out;
}

ToyCorpora generate_toy_corpora(uint64_t seed, const ToySizes& sizes, const NameTable& names) {
  if (sizes.dialogs == 0 || sizes.stories == 0 || sizes.personas == 0 ||
      sizes.entail_pairs == 0 || sizes.prompts == 0) {
    throw ValidationError("corpus sizes must be positive");
  }
  ToyCorpora out;
  Rng persona_rng(derive_seed(seed, 10));
  std::vector<PersonaDraft> drafts;
  for (size_t i = 0; i < sizes.personas; ++i) {
    drafts.push_back(draw_persona(persona_rng, "persona-" + std::to_string(i)));
    out.personas.push_back(drafts.back().persona);
  }

  Rng dialog_rng(derive_seed(seed, 11));
  for (size_t i = 0; i < sizes.dialogs; ++i) {
    out.dialogs.push_back(draw_dialog(pick(drafts, dialog_rng), dialog_rng));
  }
  Rng prompt_rng(derive_seed(seed, 12));
  for (size_t i = 0; i < sizes.prompts; ++i) {
    out.prompts.push_back(draw_dialog(pick(drafts, prompt_rng), prompt_rng));
  }

  Rng story_rng(derive_seed(seed, 13));
  const auto story_names = name_list(names);
  for (size_t i = 0; i < sizes.stories; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "story-%04zu", i);
    out.stories.push_back({id, draw_story(story_rng, story_names)});
  }

  Rng entail_rng(derive_seed(seed, 14));
  for (size_t i = 0; i < sizes.entail_pairs; ++i) {
    const PersonaDraft& p = pick(drafts, entail_rng);
    const AttributeRef& ref = pick(p.refs, entail_rng);
    const std::string attribute = p.persona.attributes[&ref - p.refs.data()];
    if (i % 2 == 0) {
      out.entail.push_back({attribute, response_for(ref, entail_rng), true});
    } else {
      AttributeRef other = ref;
      while (other.topic == ref.topic) other.topic = uniform_index(entail_rng, topics().size());
      other.attribute = uniform_index(entail_rng, topics()[other.topic].attributes.size());
      other.slots = dialog_slots(entail_rng, other.topic);
      out.entail.push_back({attribute, response_for(other, entail_rng), false});
    }
  }
  return out;
}

void write_toy_corpora(const ToyCorpora& c, const std::string& dir) {
  std::filesystem::create_directories(dir);
  std::vector<Json> rows;
  for (const Persona& p : c.personas) rows.push_back(persona_to_json(p));
  write_jsonl(dir + "/personas.jsonl", rows);
  rows.clear();
  for (const DialogExample& d : c.dialogs) rows.push_back(dialog_to_json(d));
  write_jsonl(dir + "/dialogs.jsonl", rows);
  rows.clear();
  for (const DialogExample& d : c.prompts) rows.push_back(dialog_to_json(d));
  write_jsonl(dir + "/prompts.jsonl", rows);
  rows.clear();
  for (const StoryRecord& s : c.stories) rows.push_back(Json{{"id", s.id}, {"text", s.text}});
  write_jsonl(dir + "/stories.jsonl", rows);
  rows.clear();
  for (const EntailmentPair& e : c.entail) {
    rows.push_back(Json{{"attribute", e.attribute},
                        {"response", e.response},
                        {"label", e.entailed ? "entail" : "neutral"}});
  }
  write_jsonl(dir + "/entail.jsonl", rows);
}

ToyCorpora read_toy_corpora(const std::string& dir) {
  ToyCorpora c;
  c.personas = read_personas(dir + "/personas.jsonl");
  c.dialogs = read_dialogs(dir + "/dialogs.jsonl");
  c.prompts = read_dialogs(dir + "/prompts.jsonl");
  c.stories = read_story_corpus(dir + "/stories.jsonl");
  c.entail = read_entailment_pairs(dir + "/entail.jsonl");
  return c;
}

}  // namespace pabst
