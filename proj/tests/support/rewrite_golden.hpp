// Third-to-first-person rewriting cases.
#ifndef PABST_TESTS_REWRITE_GOLDEN_HPP_
#define PABST_TESTS_REWRITE_GOLDEN_HPP_

#include <vector>

namespace pabst::testing {

struct Golden {
  const char* raw;
  const char* rewritten;
};

inline const std::vector<Golden>& golden_table() {
  static const std::vector<Golden> table = {
      {"John went to the store. He bought his milk.", "I went to the store. I bought my milk."},
      {"Tom likes tea. Tea pleases him.", "I like tea. Tea pleases me."},
      {"Tom lost his books. He was upset.", "I lost my books. I was upset."},
      {"Mary is a nurse. She works at night.", "I am a nurse. I work at night."},
      {"Sarah has a cat. Her cat sleeps a lot.", "I have a cat. My cat sleeps a lot."},
      {"John's dog barks. John loves the dog.", "My dog barks. I love the dog."},
      {"Anna watches movies. She cries at sad endings.",
       "I watch movies. I cry at sad endings."},
      {"Max fixes cars. He goes to work early.", "I fix cars. I go to work early."},
      {"Lisa made a cake for herself.", "I made a cake for myself."},
      {"The book was his. Tom kept it.", "The book was mine. I kept it."},
      {"Emma does yoga. Her friends think she is calm.",
       "I do yoga. My friends think I am calm."},
      {"Mike met Laura at the park. Mike always smiles at her. He asks Laura out.",
       "I met Laura at the park. I always smile at her. I ask Laura out."},
      {"Kate visited Paris. She loved Paris. Kate flew home.",
       "I visited Paris. I loved Paris. I flew home."},
      {"Her mother called Jane. Jane was happy.", "My mother called me. I was happy."},
      {"David plays guitar. Everyone listens to him.", "I play guitar. Everyone listens to me."},
      {"Peter teaches kids. He's a good teacher.", "I teach kids. I'm a good teacher."},
      {"Susan tries hard. She passes the test.", "I try hard. I pass the test."},
      {"The teacher praised Ben. Ben thanked the teacher.",
       "The teacher praised me. I thanked the teacher."},
      {"Jack washes his car. He drives it to the beach.",
       "I wash my car. I drive it to the beach."},
      {"Nina and Tom cook dinner. Nina enjoys it. She loves her kitchen.",
       "I and Tom cook dinner. I enjoy it. I love my kitchen."},
  };
  return table;
}

}  // namespace pabst::testing

#endif  // PABST_TESTS_REWRITE_GOLDEN_HPP_
