#include <sstream>

#include "finmwe/tree.hpp"

namespace finmwe::feat {

// Head-percolation tables after Collins (1999), appendix A. The VP row
// demotes TO below VP so that in (VP (TO to) (VP ...)) the head percolates
// through the inner verb phrase instead of stopping at the particle.
static const char* kCollinsTables = R"(
ADJP	left	NNS QP NN $ ADVP JJ VBN VBG ADJP JJR NP JJS DT FW RBR RBS SBAR RB
ADVP	right	RB RBR RBS FW ADVP TO CD JJR JJ IN NP JJS NN
CONJP	right	CC RB IN
FRAG	right
INTJ	left
LST	right	LS :
NAC	left	NN NNS NNP NNPS NP NAC EX $ CD QP PRP VBG JJ JJS JJR ADJP FW
NX	left
PP	right	IN TO VBG VBN RP FW
PRN	left
PRT	right	RP
QP	left	$ IN NNS NN JJ RB DT CD NCD QP JJR JJS
RRC	right	VP NP ADVP ADJP PP
S	left	TO IN VP S SBAR ADJP UCP NP
SBAR	left	WHNP WHPP WHADVP WHADJP IN DT S SQ SINV SBAR FRAG
SBARQ	left	SQ S SINV SBARQ FRAG
SINV	left	VBZ VBD VBP VB MD VP S SINV ADJP NP
SQ	left	VBZ VBD VBP VB MD VP SQ
UCP	right
VP	left	VBD VBN MD VBZ VB VBG VBP AUX AUXG VP TO ADJP NN NNS NP
WHADJP	left	CC WRB JJ ADJP
WHADVP	right	CC WRB
WHNP	left	WDT WP WP$ WHADJP WHPP WHNP
WHPP	right	IN TO FW
X	right
NP	rightdis	NN NNP NNPS NNS NX POS JJR
NP	left	NP
NP	rightdis	$ ADJP PRN
NP	right	CD
NP	rightdis	JJ JJS RB QP
)";

const HeadRules& HeadRules::collins() {
  static const HeadRules rules = [] {
    std::istringstream in(kCollinsTables);
    return HeadRules::load(in);
  }();
  return rules;
}

}  // namespace finmwe::feat
